//! Points of the space of unimodular planar lattices.
//!
//! A lattice is given by a row basis `g`; the lattice is `Z^2 g`. The flow
//! acts on the right by `a(t) = diag(e^{-t/2}, e^{t/2})` and the horocycle by
//! `u_s = [[1, s], [0, 1]]`. Heights use the Euclidean norm:
//! `ht(x) = 1 / (length of the shortest nonzero vector)`.

mod fundamental;
mod haar;
mod symmetry;

pub use fundamental::{to_fundamental_domain, FdMove, FundamentalPoint, OrbitSample, OrbitTracker};
pub use haar::{haar_sample, sample_fd_point, FdDraw, HaarSample, FD_HYPERBOLIC_AREA};
pub use symmetry::{verify_symmetry, SymmetryWitness};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::cfe::ReducedFraction;
use crate::error::{Error, Result};

/// Smallest height of a unimodular lattice, `(sqrt 3 / 2)^{1/2}`, attained by
/// the hexagonal lattice.
pub const MIN_HEIGHT: f64 = 0.930_604_859_102_099_6;

/// Tolerance on `|det| - 1` accepted by reduction.
pub const DET_TOLERANCE: f64 = 1e-6;

const REDUCTION_CAP: usize = 10_000;

pub type RationalMatrix = [[BigRational; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeBasis {
    rows: [[f64; 2]; 2],
    exact: Option<RationalMatrix>,
}

impl LatticeBasis {
    pub fn new(rows: [[f64; 2]; 2]) -> Self {
        LatticeBasis { rows, exact: None }
    }

    /// Builds a basis with an exact rational shadow; fails unless `|det| = 1` exactly.
    pub fn from_rational(m: RationalMatrix) -> Result<Self> {
        let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
        if det.abs() != BigRational::one() {
            return Err(Error::SingularBasis { det: ratio_to_f64(&det) });
        }
        let rows = [
            [ratio_to_f64(&m[0][0]), ratio_to_f64(&m[0][1])],
            [ratio_to_f64(&m[1][0]), ratio_to_f64(&m[1][1])],
        ];
        Ok(LatticeBasis { rows, exact: Some(m) })
    }

    pub fn identity() -> Self {
        LatticeBasis::new([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.rows
    }

    pub fn exact(&self) -> Option<&RationalMatrix> {
        self.exact.as_ref()
    }

    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.rows;
        a * d - b * c
    }

    /// `g a(t)`: scales the first column by `e^{-t/2}` and the second by `e^{t/2}`.
    pub fn flow(&self, t: f64) -> Self {
        let (s, l) = ((-t / 2.0).exp(), (t / 2.0).exp());
        let [[a, b], [c, d]] = self.rows;
        LatticeBasis::new([[a * s, b * l], [c * s, d * l]])
    }

    fn check_unimodular(&self) -> Result<()> {
        let det = self.det();
        if !det.is_finite() || (det.abs() - 1.0).abs() > DET_TOLERANCE {
            return Err(Error::SingularBasis { det });
        }
        Ok(())
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// `x_0 u_{p/q} a(t)`: rows `(e^{-t/2}, (p/q) e^{t/2})` and `(0, e^{t/2})`.
///
/// Any finite `t` is accepted; beyond `|t| > 2 ln q + 100` the entries leave
/// the range where double precision is meaningful. Use [`OrbitTracker`] for
/// heights along the orbit, which never forms these entries.
pub fn orbit_point(x: ReducedFraction, t: f64) -> LatticeBasis {
    let (s, l) = ((-t / 2.0).exp(), (t / 2.0).exp());
    let mut basis = LatticeBasis::new([[s, x.to_f64() * l], [0.0, l]]);
    if t == 0.0 {
        let r = |n: u64, d: u64| BigRational::new(BigInt::from(n), BigInt::from(d));
        basis.exact = Some([
            [BigRational::one(), r(x.numer(), x.denom())],
            [BigRational::zero(), BigRational::one()],
        ]);
    }
    basis
}

fn dot(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

/// Lagrange-Gauss reduction. The first row of the result is a shortest
/// nonzero vector, the second a shortest vector independent of it, and
/// `|<v1, v2>| <= |v1|^2 / 2`.
pub fn reduce_basis(b: &LatticeBasis) -> Result<LatticeBasis> {
    b.check_unimodular()?;
    let [mut u, mut v] = b.rows;
    // integer change of basis, tracked for the exact shadow
    let mut tu = [1i64, 0];
    let mut tv = [0i64, 1];
    if dot(u, u) > dot(v, v) {
        std::mem::swap(&mut u, &mut v);
        std::mem::swap(&mut tu, &mut tv);
    }
    let mut steps = 0;
    loop {
        steps += 1;
        if steps > REDUCTION_CAP {
            return Err(Error::IterationCap(REDUCTION_CAP));
        }
        let mu = (dot(u, v) / dot(u, u)).round();
        if mu != 0.0 {
            v = [v[0] - mu * u[0], v[1] - mu * u[1]];
            let m = mu as i64;
            tv = [tv[0] - m * tu[0], tv[1] - m * tu[1]];
        }
        if dot(v, v) >= dot(u, u) {
            break;
        }
        std::mem::swap(&mut u, &mut v);
        std::mem::swap(&mut tu, &mut tv);
    }
    let exact = b.exact.as_ref().map(|m| {
        let row = |t: [i64; 2]| {
            let (t0, t1) = (BigRational::from(BigInt::from(t[0])), BigRational::from(BigInt::from(t[1])));
            [&t0 * &m[0][0] + &t1 * &m[1][0], &t0 * &m[0][1] + &t1 * &m[1][1]]
        };
        [row(tu), row(tv)]
    });
    Ok(LatticeBasis { rows: [u, v], exact })
}

/// Length of the shortest nonzero vector.
pub fn shortest_length(b: &LatticeBasis) -> Result<f64> {
    let r = reduce_basis(b)?;
    Ok(dot(r.rows[0], r.rows[0]).sqrt())
}

pub fn height(b: &LatticeBasis) -> Result<f64> {
    Ok(1.0 / shortest_length(b)?)
}

/// The dual lattice, with basis `(g^{-1})^T`.
pub fn dual_point(b: &LatticeBasis) -> LatticeBasis {
    let [[a, bb], [c, d]] = b.rows;
    let det = a * d - bb * c;
    let rows = [[d / det, -c / det], [-bb / det, a / det]];
    let exact = b.exact.as_ref().map(|m| {
        let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
        [
            [&m[1][1] / &det, -&m[1][0] / &det],
            [-&m[0][1] / &det, &m[0][0] / &det],
        ]
    });
    LatticeBasis { rows, exact }
}
