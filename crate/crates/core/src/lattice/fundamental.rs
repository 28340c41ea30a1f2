//! Reduction of lattices to the standard fundamental domain
//! `F = {|x| <= 1/2, x^2 + y^2 >= 1}` of the modular surface.
//!
//! A basis `g = [[a, b], [c, d]]` corresponds to `z = g.i = (a i + b) / (c i + d)`.
//! In `F`, `y = 1 / |second row|^2`, which is `ht^2`. Ties follow the usual
//! half-open convention: `x = +1/2` is excluded and so is the right half of
//! the unit arc.

use super::{LatticeBasis, REDUCTION_CAP};
use crate::cfe::ReducedFraction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdMove {
    /// `z -> z + n`
    Translate(i64),
    /// `z -> -1/z`
    Invert,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalPoint {
    pub x: f64,
    pub y: f64,
    pub word: Vec<FdMove>,
    /// Accumulated `gamma` in SL2(Z) with `gamma . z_0 = x + iy`, row-major.
    pub gamma: [[i64; 2]; 2],
}

impl FundamentalPoint {
    pub fn height(&self) -> f64 {
        self.y.sqrt()
    }
}

fn needs_inversion(x: f64, y: f64) -> bool {
    let r2 = x * x + y * y;
    r2 < 1.0 || (r2 == 1.0 && x > 0.0)
}

/// Maps the lattice to its point in `F`. A determinant `-1` basis is first
/// turned into a determinant `1` basis of the same lattice by negating its
/// first row.
pub fn to_fundamental_domain(b: &LatticeBasis) -> Result<FundamentalPoint> {
    b.check_unimodular()?;
    let [mut r0, mut r1] = b.rows;
    if b.det() < 0.0 {
        r0 = [-r0[0], -r0[1]];
    }
    let mut word = Vec::new();
    let mut g = [[1i64, 0], [0, 1]];
    let mut translated = false;
    for _ in 0..REDUCTION_CAP {
        let n2 = r1[0] * r1[0] + r1[1] * r1[1];
        let det = r0[0] * r1[1] - r0[1] * r1[0];
        let x = (r0[0] * r1[0] + r0[1] * r1[1]) / n2;
        let y = det / n2;
        let n = (x + 0.5).floor();
        if n != 0.0 && !translated {
            // z - n: row0 -= n row1
            r0 = [r0[0] - n * r1[0], r0[1] - n * r1[1]];
            let m = n as i64;
            g[0] = [g[0][0] - m * g[1][0], g[0][1] - m * g[1][1]];
            word.push(FdMove::Translate(-m));
            translated = true;
            continue;
        }
        translated = false;
        if !needs_inversion(x, y) {
            return Ok(FundamentalPoint { x, y, word, gamma: g });
        }
        // -1/z: (row0, row1) -> (-row1, row0)
        (r0, r1) = ([-r1[0], -r1[1]], r0);
        g = [[-g[1][0], -g[1][1]], g[0]];
        word.push(FdMove::Invert);
    }
    Err(Error::IterationCap(REDUCTION_CAP))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSample {
    pub t: f64,
    pub height: f64,
    pub fd_point: (f64, f64),
}

/// Follows the divergent orbit of `p/q`, whose point at time `t` is
/// `z_t = p/q + i e^{-t}`.
///
/// The reducing `gamma = (a, b, c, d)` is kept as exact integers, and
/// `gamma . z_t` is evaluated from the exact integers `a p + b q` and
/// `c p + d q`, so no entry of size `q` is ever rounded. Successive calls
/// reuse the previous `gamma` as a warm start.
#[derive(Debug, Clone)]
pub struct OrbitTracker {
    p: i128,
    q: i128,
    gamma: [i64; 4],
}

/// `gamma . z_t` as `(re, im, |w|^2 < 1, |w|^2 == 1)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Image {
    pub re: f64,
    pub im: f64,
    pub inside_arc: bool,
    pub on_arc: bool,
}

impl OrbitTracker {
    pub fn new(x: ReducedFraction) -> Self {
        OrbitTracker { p: x.numer() as i128, q: x.denom() as i128, gamma: [1, 0, 0, 1] }
    }

    pub fn fraction(&self) -> (u64, u64) {
        (self.p as u64, self.q as u64)
    }

    /// Current reducing matrix `(a, b, c, d)`.
    pub fn gamma(&self) -> [i64; 4] {
        self.gamma
    }

    pub(crate) fn image(&self, g: [i64; 4], eps: f64) -> Image {
        let [a, b, c, d] = g.map(i128::from);
        let qf = self.q as f64;
        let big_a = (a * self.p + b * self.q) as f64 / qf;
        let big_c = (c * self.p + d * self.q) as f64 / qf;
        let ae = a as f64 * eps;
        let ce = c as f64 * eps;
        let den = big_c * big_c + ce * ce;
        let num = big_a * big_a + ae * ae;
        Image {
            re: (big_a * big_c + ae * ce) / den,
            im: eps / den,
            inside_arc: num < den,
            on_arc: num == den,
        }
    }

    /// Reduces `z_t` into `F`, updating the stored `gamma`.
    pub fn sample(&mut self, t: f64) -> Result<OrbitSample> {
        if !t.is_finite() {
            return Err(Error::OutOfRange(format!("t = {t}")));
        }
        let eps = (-t).exp();
        if eps == 0.0 || !eps.is_finite() {
            return Err(Error::OutOfRange(format!("t = {t} leaves double range")));
        }
        let mut g = self.gamma;
        let mut translated = false;
        for _ in 0..REDUCTION_CAP {
            let w = self.image(g, eps);
            let n = (w.re + 0.5).floor();
            // one translation lands in the strip; a second one is rounding noise
            if n != 0.0 && !translated {
                let n = n as i64;
                g = [g[0] - n * g[2], g[1] - n * g[3], g[2], g[3]];
                translated = true;
                continue;
            }
            translated = false;
            if w.inside_arc || (w.on_arc && w.re > 0.0) {
                g = [-g[2], -g[3], g[0], g[1]];
                continue;
            }
            self.gamma = g;
            return Ok(OrbitSample { t, height: w.im.sqrt(), fd_point: (w.re, w.im) });
        }
        Err(Error::IterationCap(REDUCTION_CAP))
    }
}
