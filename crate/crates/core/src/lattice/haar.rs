//! Sampling the invariant probability measure, `(3/pi) dx dy / y^2` on `F`.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::LatticeBasis;

/// Hyperbolic area of the fundamental domain.
pub const FD_HYPERBOLIC_AREA: f64 = PI / 3.0;

const Y_FLOOR: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdDraw {
    pub x: f64,
    pub y: f64,
    /// Proposals consumed, including the accepted one.
    pub proposals: u32,
}

/// Rejection sampler: `x` uniform on `[-1/2, 1/2)`, `y = (sqrt 3 / 2) / U`
/// (hyperbolic-uniform on the box above `y = sqrt 3 / 2`), kept when
/// `x^2 + y^2 >= 1`.
pub fn sample_fd_point<R: Rng + ?Sized>(rng: &mut R) -> FdDraw {
    let mut proposals = 0;
    loop {
        proposals += 1;
        let x = rng.gen::<f64>() - 0.5;
        let u = 1.0 - rng.gen::<f64>();
        let y = Y_FLOOR / u;
        if x * x + y * y >= 1.0 {
            return FdDraw { x, y, proposals };
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaarSample {
    pub basis: LatticeBasis,
    pub x: f64,
    pub y: f64,
    pub angle: f64,
}

/// A Haar-random lattice: `[[sqrt y, x / sqrt y], [0, 1 / sqrt y]] k_theta`
/// with `(x, y)` from [`sample_fd_point`] and `theta` uniform.
pub fn haar_sample<R: Rng + ?Sized>(rng: &mut R) -> HaarSample {
    let FdDraw { x, y, .. } = sample_fd_point(rng);
    let angle = rng.gen::<f64>() * TAU;
    let (s, c) = angle.sin_cos();
    let r = y.sqrt();
    let g = [[r, x / r], [0.0, 1.0 / r]];
    let rows = [
        [g[0][0] * c + g[0][1] * s, -g[0][0] * s + g[0][1] * c],
        [g[1][0] * c + g[1][1] * s, -g[1][0] * s + g[1][1] * c],
    ];
    HaarSample { basis: LatticeBasis::new(rows), x, y, angle }
}
