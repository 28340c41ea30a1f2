//! Time averages along the divergent orbits `x_0 u_{p/q} a(t)`, `0 <= t <= 2 ln q`,
//! compared with the invariant measure.
//!
//! Time integrals use the trapezoid rule on a uniform grid. Weights are kept
//! in units of half a step (1 at the ends, 2 inside), so all accumulators are
//! integers and merges are exact.

use std::f64::consts::PI;

use rand::Rng;

use crate::arith::Modulus;
use crate::cfe::ReducedFraction;
use crate::error::{Error, Result};
use crate::lattice::{haar_sample, to_fundamental_domain, OrbitTracker};
use crate::par::chunked_reduce;
use crate::quad::gauss_legendre;

/// Largest value of `1/y` on the fundamental domain.
pub const U_MAX: f64 = 1.154_700_538_379_251_5;

/// `P(ht >= M) = 3 / (pi M^2)` for `M >= 1` under the invariant measure.
pub fn haar_height_tail(m: f64) -> f64 {
    3.0 / (PI * m * m)
}

/// Grid `t_k = k h`, `h = 2 ln q / N`, with `N = ceil(2 ln q / dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub steps: usize,
    pub h: f64,
}

impl TimeGrid {
    pub fn new(q: u64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= 0.1) {
            return Err(Error::OutOfRange(format!("dt = {dt} must lie in (0, 0.1]")));
        }
        let span = 2.0 * (q as f64).ln();
        let steps = ((span / dt).ceil() as usize).max(1);
        Ok(TimeGrid { steps, h: span / steps as f64 })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    /// Trapezoid weight in half steps.
    pub fn weight(&self, k: usize) -> u64 {
        if k == 0 || k == self.steps {
            1
        } else {
            2
        }
    }

    pub fn total_weight(&self) -> u64 {
        2 * self.steps as u64
    }
}

/// Histogram on the fundamental domain in the coordinates `x` and `u = 1/y`.
/// The invariant measure is `(3/pi) dx du` on `{|x| <= 1/2, u <= 1/sqrt(1-x^2)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdHistogram {
    nx: usize,
    nu: usize,
    counts: Vec<u64>,
}

impl FdHistogram {
    pub fn new(nx: usize, nu: usize) -> Result<Self> {
        if nx == 0 || nu == 0 {
            return Err(Error::OutOfRange("empty fundamental-domain grid".into()));
        }
        Ok(FdHistogram { nx, nu, counts: vec![0; nx * nu] })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.nu)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn cell(&self, x: f64, y: f64) -> usize {
        let ix = (((x + 0.5) * self.nx as f64).floor().max(0.0) as usize).min(self.nx - 1);
        let iu = (((1.0 / y) / U_MAX * self.nu as f64).floor().max(0.0) as usize).min(self.nu - 1);
        ix * self.nu + iu
    }

    pub fn add(&mut self, x: f64, y: f64, w: u64) {
        let c = self.cell(x, y);
        self.counts[c] += w;
    }

    pub fn merge(&mut self, other: &FdHistogram) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Incompatible("grid shapes differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.total() as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// Marginal frequencies over the `u` bins.
    pub fn u_marginal(&self) -> Vec<f64> {
        let f = self.frequencies();
        (0..self.nu).map(|iu| (0..self.nx).map(|ix| f[ix * self.nu + iu]).sum()).collect()
    }
}

/// Invariant-measure cell probabilities by quadrature over each `x` cell.
pub fn haar_reference(nx: usize, nu: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(nx * nu);
    for ix in 0..nx {
        let (x0, x1) = (-0.5 + ix as f64 / nx as f64, -0.5 + (ix + 1) as f64 / nx as f64);
        for iu in 0..nu {
            let (u0, u1) = (U_MAX * iu as f64 / nu as f64, U_MAX * (iu + 1) as f64 / nu as f64);
            let len = |x: f64| ((1.0 - x * x).powf(-0.5).min(u1) - u0).max(0.0);
            out.push(3.0 / PI * gauss_legendre(len, x0, x1, 64));
        }
    }
    out
}

/// Cell frequencies of `n` points from the Haar sampler, located through the
/// lattice reduction rather than the sampler's own coordinates.
pub fn haar_reference_mc<R: Rng + ?Sized>(rng: &mut R, n: usize, nx: usize, nu: usize) -> Result<Vec<f64>> {
    let mut h = FdHistogram::new(nx, nu)?;
    for _ in 0..n {
        let s = haar_sample(rng);
        let fd = to_fundamental_domain(&s.basis)?;
        h.add(fd.x, fd.y, 1);
    }
    Ok(h.frequencies())
}

/// `sum (f - r)^2 / r` over cells with positive reference mass.
pub fn chi_square_discrepancy(freq: &[f64], reference: &[f64]) -> Result<f64> {
    if freq.len() != reference.len() {
        return Err(Error::Incompatible("histogram sizes differ".into()));
    }
    Ok(freq.iter().zip(reference).filter(|(_, &r)| r > 0.0).map(|(f, r)| (f - r).powi(2) / r).sum())
}

/// Fraction of the time in `[0, 2 ln q]` that the orbit of `x` spends at
/// height `M` or more.
pub fn orbit_height_tail(x: ReducedFraction, m: f64, dt: f64) -> Result<f64> {
    let grid = TimeGrid::new(x.denom(), dt)?;
    let mut tracker = OrbitTracker::new(x);
    let mut hit = 0u64;
    for k in 0..=grid.steps {
        if tracker.sample(grid.time(k))?.height >= m {
            hit += grid.weight(k);
        }
    }
    Ok(hit as f64 / grid.total_weight() as f64)
}

#[derive(Debug, Clone)]
pub struct OrbitSweepConfig {
    pub dt: f64,
    pub thresholds: Vec<f64>,
    pub nx: usize,
    pub nu: usize,
    pub chunk: usize,
}

impl Default for OrbitSweepConfig {
    fn default() -> Self {
        OrbitSweepConfig { dt: 0.05, thresholds: vec![2.0], nx: 16, nu: 16, chunk: 256 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSweep {
    pub q: u64,
    pub orbits: u64,
    /// Tail weights per threshold, in half steps.
    pub tail_weights: Vec<u64>,
    pub fd: FdHistogram,
    pub grid: TimeGrid,
}

impl OrbitSweep {
    /// Averaged tail fractions, one per threshold.
    pub fn tails(&self) -> Vec<f64> {
        let total = self.orbits as f64 * self.grid.total_weight() as f64;
        self.tail_weights.iter().map(|&w| w as f64 / total).collect()
    }

    pub fn discrepancy(&self) -> Result<f64> {
        let (nx, nu) = self.fd.shape();
        chi_square_discrepancy(&self.fd.frequencies(), &haar_reference(nx, nu))
    }
}

struct Partial {
    tails: Vec<u64>,
    fd: FdHistogram,
    orbits: u64,
}

/// Time averages over all orbits `p/q`, `p` in `(Z/qZ)^x`.
pub fn orbit_sweep(m: &Modulus, cfg: &OrbitSweepConfig) -> Result<OrbitSweep> {
    let q = m.q();
    if q < 3 {
        return Err(Error::OutOfRange("orbit sweeps need q >= 3".into()));
    }
    let grid = TimeGrid::new(q, cfg.dt)?;
    let residues: Vec<u64> = m.coprime_residues().collect();
    let empty = || -> Result<Partial> {
        Ok(Partial { tails: vec![0; cfg.thresholds.len()], fd: FdHistogram::new(cfg.nx, cfg.nu)?, orbits: 0 })
    };
    let run = |chunk: &[u64]| -> Result<Partial> {
        let mut part = empty()?;
        for &p in chunk {
            let mut tracker = OrbitTracker::new(ReducedFraction::new(p, q)?);
            for k in 0..=grid.steps {
                let s = tracker.sample(grid.time(k))?;
                let w = grid.weight(k);
                for (acc, &thr) in part.tails.iter_mut().zip(&cfg.thresholds) {
                    if s.height >= thr {
                        *acc += w;
                    }
                }
                part.fd.add(s.fd_point.0, s.fd_point.1, w);
            }
            part.orbits += 1;
        }
        Ok(part)
    };
    let merge = |a: Result<Partial>, b: Result<Partial>| -> Result<Partial> {
        let (mut a, b) = (a?, b?);
        for (x, y) in a.tails.iter_mut().zip(&b.tails) {
            *x += y;
        }
        a.fd.merge(&b.fd)?;
        a.orbits += b.orbits;
        Ok(a)
    };
    let total = chunked_reduce(&residues, cfg.chunk, empty(), run, merge)?;
    Ok(OrbitSweep { q, orbits: total.orbits, tail_weights: total.tails, fd: total.fd, grid })
}

/// Exact averaged tail for prime `q`, from the short-vector intervals.
///
/// At height `M >= 2` at most one primitive vector `(m e^{-t/2}, k e^{t/2}/q)`,
/// `k = m p (mod q)`, is shorter than `1/M`; it is short exactly while
/// `e^t` lies between the roots of `k^2 E^2 / q^2 - E / M^2 + m^2`. For prime
/// `q` each pair `(m, k)` with `0 < m < q` belongs to exactly one `p`.
pub fn exact_mean_tail_prime(q: u64, big_m: f64) -> f64 {
    let qf = q as f64;
    let span = 2.0 * qf.ln();
    let inv_m2 = 1.0 / (big_m * big_m);
    let mut total = 0.0;
    let mut m = 1u64;
    while (m as f64) * big_m <= qf {
        let kmax = (qf / (big_m * big_m * m as f64)).floor() as i64;
        for k in (-kmax..=kmax).filter(|&k| k != 0) {
            if num_integer::gcd(m as i64, k) != 1 {
                continue;
            }
            let kf = k as f64;
            let a = kf * kf / (qf * qf);
            let disc = inv_m2 * inv_m2 - 4.0 * a * (m * m) as f64;
            if disc < 0.0 {
                continue;
            }
            let lo = ((inv_m2 - disc.sqrt()) / (2.0 * a)).ln().max(0.0);
            let hi = ((inv_m2 + disc.sqrt()) / (2.0 * a)).ln().min(span);
            if hi > lo {
                total += hi - lo;
            }
        }
        m += 1;
    }
    // (m, k) and (-m, -k) are the same vector; m > 0 already fixes the sign
    total / (span * (q - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rf(p: u64, q: u64) -> ReducedFraction {
        ReducedFraction::new(p, q).unwrap()
    }

    #[test]
    fn tail_examples() {
        assert_eq!(orbit_height_tail(rf(3, 10), crate::lattice::MIN_HEIGHT, 0.05).unwrap(), 1.0);
        assert!(orbit_height_tail(rf(3, 10), 1.0, 0.05).unwrap() < 1.0);
        assert_eq!(orbit_height_tail(rf(3, 10), 1e6, 0.05).unwrap(), 0.0);
        assert!((haar_height_tail(2.0) - 0.238_732_414_637_843).abs() < 1e-12);
        assert!(orbit_height_tail(rf(3, 10), 2.0, 0.5).is_err());
    }

    #[test]
    fn tail_converges_under_grid_refinement() {
        for (p, q) in [(1234u64, 10_007u64), (5, 101)] {
            let a = orbit_height_tail(rf(p, q), 2.0, 0.01).unwrap();
            let b = orbit_height_tail(rf(p, q), 2.0, 0.005).unwrap();
            assert!((a - b).abs() < 0.01, "{a} {b}");
        }
    }

    #[test]
    fn averaged_tail_matches_exact_intervals() {
        let q = 1009u64;
        let s = orbit_sweep(&Modulus::new(q).unwrap(), &OrbitSweepConfig { dt: 0.01, ..Default::default() }).unwrap();
        let exact = exact_mean_tail_prime(q, 2.0);
        assert!((s.tails()[0] - exact).abs() < 0.01, "{} vs {exact}", s.tails()[0]);
    }

    #[test]
    fn reference_sums_to_one() {
        let r = haar_reference(16, 16);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        assert!(r.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn reference_agrees_with_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 400_000;
        let mc = haar_reference_mc(&mut rng, n, 8, 8).unwrap();
        let r = haar_reference(8, 8);
        let chi = chi_square_discrepancy(&mc, &r).unwrap() * n as f64;
        // chi-square with at most 63 degrees of freedom
        assert!(chi < 120.0, "{chi}");
        let mut rng2 = ChaCha8Rng::seed_from_u64(22);
        let mc2 = haar_reference_mc(&mut rng2, n, 8, 8).unwrap();
        let two = chi_square_discrepancy(&mc, &mc2).unwrap() * n as f64 / 2.0;
        assert!(two < 120.0, "{two}");
    }

    #[test]
    fn sweep_is_deterministic_across_chunkings() {
        let m = Modulus::new(211).unwrap();
        let a = orbit_sweep(&m, &OrbitSweepConfig { chunk: 7, ..Default::default() }).unwrap();
        let b = orbit_sweep(&m, &OrbitSweepConfig { chunk: 64, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }
}
