//! The cross-section `C` of the geodesic flow and its first-return dynamics.
//!
//! A point of `C` is `(y, z, eps)` with `0 < y < 1`, `0 < z <= 1/(1+y)`. Its
//! geodesic has forward endpoint `omega = eps y` and backward endpoint
//! `alpha = eps (y - 1/z)`, so `C+` is `alpha <= -1 < 0 < omega < 1` and `C-`
//! is `-1 < omega < 0 < 1 <= alpha`. The crossing itself happens where the
//! geodesic meets the imaginary axis, at height `sqrt(-alpha omega)`.

use std::f64::consts::LN_2;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::cfe::{cfe_len, gauss_map, GaussImage, ReducedFraction};
use crate::error::{Error, Result};
use crate::lattice::OrbitTracker;
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn to_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

fn big(n: u64) -> BigInt {
    BigInt::from(n)
}

fn frac(x: ReducedFraction) -> BigRational {
    BigRational::new(big(x.numer()), big(x.denom()))
}

pub(crate) fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap_or(f64::NAN).ln()
    } else {
        let shift = bits - 64;
        (n >> shift).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * LN_2
    }
}

/// Natural log of a positive rational.
pub(crate) fn ln_ratio(r: &BigRational) -> f64 {
    ln_big(r.numer()) - ln_big(r.denom())
}

/// An exact point of the section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossSectionPoint {
    y: BigRational,
    z: BigRational,
    eps: Sign,
}

impl CrossSectionPoint {
    pub fn new(y: BigRational, z: BigRational, eps: Sign) -> Result<Self> {
        if !(y.is_positive() && y < BigRational::one()) {
            return Err(Error::DomainViolation(format!("y = {y} not in (0, 1)")));
        }
        let cap = (BigRational::one() + &y).recip();
        if !z.is_positive() || z > cap {
            return Err(Error::DomainViolation(format!("z = {z} not in (0, 1/(1+y)] for y = {y}")));
        }
        Ok(CrossSectionPoint { y, z, eps })
    }

    pub fn y(&self) -> &BigRational {
        &self.y
    }

    pub fn z(&self) -> &BigRational {
        &self.z
    }

    pub fn eps(&self) -> Sign {
        self.eps
    }

    /// `y` as a reduced fraction; `y` stays a fraction with `q`-bounded
    /// denominator along a rational orbit.
    pub fn y_fraction(&self) -> Result<ReducedFraction> {
        let p = self.y.numer().to_u64().ok_or(Error::Overflow("section y numerator"))?;
        let q = self.y.denom().to_u64().ok_or(Error::Overflow("section y denominator"))?;
        ReducedFraction::new(p, q)
    }

    /// `(alpha, omega)`, the backward and forward endpoints.
    pub fn endpoints(&self) -> (BigRational, BigRational) {
        let inv_z = self.z.recip();
        match self.eps {
            Sign::Plus => (&self.y - inv_z, self.y.clone()),
            Sign::Minus => (inv_z - &self.y, -self.y.clone()),
        }
    }

    pub fn to_sample(&self) -> SectionSample {
        SectionSample {
            y: self.y.to_f64().unwrap_or(f64::NAN),
            z: self.z.to_f64().unwrap_or(f64::NAN),
            eps: self.eps,
        }
    }
}

/// Outcome of one application of the return map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReturnStep {
    Next(CrossSectionPoint),
    /// `T(y) = 0`: the orbit never returns.
    Terminated,
}

/// First meeting of the orbit of `x` with the section.
pub fn first_crossing(x: ReducedFraction) -> Result<CrossSectionPoint> {
    let (p, q) = (x.numer(), x.denom());
    if p == 1 || p + 1 == q || 2 * p == q {
        return Err(Error::DegenerateStart { p, q });
    }
    let (start, eps) = if 2 * p < q { (x, Sign::Minus) } else { (x.complement(), Sign::Plus) };
    let y = match gauss_map(start) {
        GaussImage::Fraction(y) => y,
        GaussImage::Zero => return Err(Error::DegenerateStart { p, q }),
    };
    CrossSectionPoint::new(frac(y), frac(start), eps)
}

/// `T_C(y, z, eps) = (T(y), y (1 - y z), -eps)`.
pub fn return_map(pt: &CrossSectionPoint) -> Result<ReturnStep> {
    let y = pt.y_fraction()?;
    let y2 = match gauss_map(y) {
        GaussImage::Zero => return Ok(ReturnStep::Terminated),
        GaussImage::Fraction(f) => frac(f),
    };
    let z2 = &pt.y * (BigRational::one() - &pt.y * &pt.z);
    CrossSectionPoint::new(y2, z2, pt.eps.flip()).map(ReturnStep::Next).map_err(|e| match e {
        Error::DomainViolation(m) => Error::InvariantViolation(format!("return map left the section: {m}")),
        other => other,
    })
}

fn half_log_term(y: &BigRational, z: &BigRational) -> f64 {
    // ln(z / y (1 - y z)) / 2
    let v = z / y * (BigRational::one() - y * z);
    ln_ratio(&v) / 2.0
}

/// `r_C = -2 ln y - ln(z/y (1 - yz))/2 + ln(z'/y' (1 - y'z'))/2`.
pub fn return_time(pt: &CrossSectionPoint) -> Result<f64> {
    let next = match return_map(pt)? {
        ReturnStep::Next(n) => n,
        ReturnStep::Terminated => return Err(Error::Terminated),
    };
    Ok(-2.0 * ln_ratio(&pt.y) - half_log_term(&pt.y, &pt.z) + half_log_term(&next.y, &next.z))
}

/// Flow time, measured from `x_0 u_{p/q}`, at which the orbit meets `pt`.
///
/// With `alpha = A/C` in lowest terms (`C > 0`) this is
/// `ln(A^2 - A C omega) - ln(-alpha omega)/2`.
pub fn departure_time(pt: &CrossSectionPoint) -> f64 {
    let (alpha, omega) = pt.endpoints();
    let a = BigRational::from(alpha.numer().clone());
    let c = BigRational::from(alpha.denom().clone());
    let main = &a * &a - &a * &c * &omega;
    ln_ratio(&main) - ln_ratio(&(-&alpha * &omega)) / 2.0
}

/// Flow time from `pt` until the orbit reaches the end of its life span at
/// `2 ln q`. With `omega = B/D` in lowest terms this is
/// `ln(B^2 - B D alpha) - ln(-alpha omega)/2`.
pub fn arrival_offset(pt: &CrossSectionPoint) -> f64 {
    let (alpha, omega) = pt.endpoints();
    let b = BigRational::from(omega.numer().clone());
    let d = BigRational::from(omega.denom().clone());
    let main = &b * &b - &b * &d * &alpha;
    ln_ratio(&main) - ln_ratio(&(-&alpha * &omega)) / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingRecord {
    pub point: CrossSectionPoint,
    /// Absolute flow time along the orbit.
    pub t: f64,
}

/// All crossings of the orbit of `x`, each `t` obtained by adding the
/// return time to the previous one.
pub fn crossing_sequence(x: ReducedFraction) -> Result<Vec<CrossingRecord>> {
    let first = first_crossing(x)?;
    let mut t = departure_time(&first);
    let mut out = Vec::with_capacity(cfe_len(x));
    let mut pt = first;
    loop {
        let step = return_map(&pt)?;
        match step {
            ReturnStep::Terminated => {
                out.push(CrossingRecord { point: pt, t });
                return Ok(out);
            }
            ReturnStep::Next(next) => {
                let r = return_time(&pt)?;
                out.push(CrossingRecord { point: pt, t });
                t += r;
                pt = next;
            }
        }
    }
}

/// `t_last + arrival_offset(last)`, which equals `2 ln q`.
pub fn exit_time(records: &[CrossingRecord]) -> Option<f64> {
    records.last().map(|r| r.t + arrival_offset(&r.point))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericCrossing {
    pub t: f64,
    pub eps: Sign,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NumericScan {
    pub crossings: Vec<NumericCrossing>,
    /// Meetings with the imaginary axis in a frame where an endpoint is
    /// exactly `1` or `-1`. Along a rational orbit both endpoints are cusps,
    /// and these meetings sit on the boundary of the section.
    pub boundary_events: Vec<f64>,
}

type Q = Ratio<i128>;

fn section_sign(alpha: Q, omega: Q) -> Option<Sign> {
    let one = Q::one();
    let zero = Q::zero();
    if alpha <= -one && zero < omega && omega < one {
        Some(Sign::Plus)
    } else if -one < omega && omega < zero && one <= alpha {
        Some(Sign::Minus)
    } else {
        None
    }
}

/// Scans the orbit of `x` on a grid of step `dt` over `[0, 2 ln q + 1]` and
/// reports each time the geodesic meets the imaginary axis of some frame in
/// which its endpoints satisfy the `C+` or `C-` pattern. The crossing time is
/// linearly interpolated between grid points.
pub fn detect_crossings_numeric(x: ReducedFraction, dt: f64) -> Result<NumericScan> {
    if !(dt > 0.0 && dt <= 1e-3) {
        return Err(Error::OutOfRange(format!("dt = {dt} must lie in (0, 1e-3]")));
    }
    let (p, q) = (x.numer() as i128, x.denom() as i128);
    let t_end = 2.0 * (q as f64).ln() + 1.0;
    let steps = (t_end / dt).ceil() as u64;
    let mut tracker = OrbitTracker::new(x);
    tracker.sample(0.0)?;
    let mut out = NumericScan::default();
    let mut t_prev = 0.0f64;
    for k in 1..=steps {
        let t = k as f64 * dt;
        tracker.sample(t)?;
        let g = tracker.gamma();
        let before = tracker.image(g, (-t_prev).exp()).re;
        let after = tracker.image(g, (-t).exp()).re;
        let lo = before.min(after).floor() as i64;
        let hi = before.max(after).ceil() as i64;
        for n in lo..=hi {
            let nf = n as f64;
            if (before < nf) == (after < nf) {
                continue;
            }
            let [a, b, c, d] = [g[0] - n * g[2], g[1] - n * g[3], g[2], g[3]].map(i128::from);
            let num = a * p + b * q;
            let den = c * p + d * q;
            if c == 0 || den == 0 {
                continue;
            }
            let alpha = Q::new(a, c);
            let omega = Q::new(num, den);
            let tc = t_prev + (nf - before) / (after - before) * dt;
            // omega = 0 is the orbit's own cusp, approached but never crossed
            if omega.is_zero() || alpha.is_zero() {
                continue;
            }
            if omega.abs() == Q::one() || alpha.abs() == Q::one() {
                out.boundary_events.push(tc);
                continue;
            }
            let sign = section_sign(alpha, omega).or_else(|| section_sign(-alpha.recip(), -omega.recip()));
            if let Some(eps) = sign {
                out.crossings.push(NumericCrossing { t: tc, eps });
            }
        }
        t_prev = t;
    }
    Ok(out)
}

/// `-4 int_0^1 ln(y) / (1 + y) dy` by composite Gauss-Legendre after the
/// substitution `y = e^{-s}`; the exact value is `pi^2 / 3`.
pub fn log_integral() -> f64 {
    // int_0^inf s e^{-s} / (1 + e^{-s}) ds, truncated where the integrand is below 1e-30
    let inner = gauss_legendre(|s| s * (-s).exp() / (1.0 + (-s).exp()), 0.0, 80.0, 400);
    4.0 * inner
}

/// The normalizing constant of the section-to-Haar formula.
pub fn kappa_quadrature() -> f64 {
    1.0 / log_integral()
}

/// A floating-point point of the section, for Monte Carlo over the
/// invariant measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionSample {
    pub y: f64,
    pub z: f64,
    pub eps: Sign,
}

impl SectionSample {
    /// Draws from normalized Lebesgue measure on the section: `y` has density
    /// `1/((1+y) ln 2)` and `z` is uniform on `(0, 1/(1+y)]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let y = loop {
            let y = 2f64.powf(rng.gen::<f64>()) - 1.0;
            if y > 0.0 {
                break y;
            }
        };
        let z = (1.0 - rng.gen::<f64>()) / (1.0 + y);
        let eps = if rng.gen::<bool>() { Sign::Plus } else { Sign::Minus };
        SectionSample { y, z, eps }
    }

    pub fn return_map(&self) -> Option<SectionSample> {
        let inv = 1.0 / self.y;
        let y2 = inv - inv.floor();
        if y2 <= 0.0 || !y2.is_finite() {
            return None;
        }
        Some(SectionSample { y: y2, z: self.y * (1.0 - self.y * self.z), eps: self.eps.flip() })
    }

    pub fn return_time(&self) -> Option<f64> {
        let n = self.return_map()?;
        let h = |y: f64, z: f64| (z / y * (1.0 - y * z)).ln() / 2.0;
        Some(-2.0 * self.y.ln() - h(self.y, self.z) + h(n.y, n.z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnTimeStats {
    pub crossings: u64,
    pub mean: f64,
    pub min: f64,
}

/// Follows `orbits` section-random orbits for `returns` returns each and
/// averages the return times over all crossings.
pub fn mean_return_time_mc<R: Rng + ?Sized>(rng: &mut R, orbits: u64, returns: u32) -> ReturnTimeStats {
    let (mut sum, mut n, mut min) = (0.0, 0u64, f64::INFINITY);
    for _ in 0..orbits {
        let mut pt = SectionSample::random(rng);
        for _ in 0..returns {
            let (Some(r), Some(next)) = (pt.return_time(), pt.return_map()) else { break };
            sum += r;
            n += 1;
            min = min.min(r);
            pt = next;
        }
    }
    ReturnTimeStats { crossings: n, mean: sum / n as f64, min }
}

/// The Haar average of the return time, `1 / (2 ln 2 kappa) = zeta(2) / ln 2`.
pub fn haar_mean_return_time(kappa: f64) -> f64 {
    1.0 / (2.0 * LN_2 * kappa)
}

/// Numerator and denominator coprime.
#[cfg(test)]
pub(crate) fn is_reduced(r: &BigRational) -> bool {
    use num_integer::Integer;
    r.numer().gcd(r.denom()).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfe::{cfe_digits, GaussOrbit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn rf(p: u64, q: u64) -> ReducedFraction {
        ReducedFraction::new(p, q).unwrap()
    }

    #[test]
    fn first_crossing_examples() {
        let a = first_crossing(rf(2, 5)).unwrap();
        assert_eq!((a.y(), a.z(), a.eps()), (&r(1, 2), &r(2, 5), Sign::Minus));
        let b = first_crossing(rf(3, 5)).unwrap();
        assert_eq!((b.y(), b.z(), b.eps()), (&r(1, 2), &r(2, 5), Sign::Plus));
        for (p, q) in [(1, 3), (1, 2), (4, 5), (1, 100), (99, 100)] {
            assert!(matches!(first_crossing(rf(p, q)), Err(Error::DegenerateStart { .. })));
        }
    }

    #[test]
    fn return_map_examples() {
        let pt = CrossSectionPoint::new(r(2, 5), r(1, 3), Sign::Plus).unwrap();
        let ReturnStep::Next(n) = return_map(&pt).unwrap() else { panic!() };
        assert_eq!((n.y(), n.z(), n.eps()), (&r(1, 2), &r(26, 75), Sign::Minus));
        let pt = CrossSectionPoint::new(r(2, 5), r(2, 5), Sign::Minus).unwrap();
        let ReturnStep::Next(n) = return_map(&pt).unwrap() else { panic!() };
        assert_eq!((n.y(), n.z(), n.eps()), (&r(1, 2), &r(42, 125), Sign::Plus));
        let end = CrossSectionPoint::new(r(1, 2), r(1, 3), Sign::Plus).unwrap();
        assert_eq!(return_map(&end).unwrap(), ReturnStep::Terminated);
        assert!(matches!(return_time(&end), Err(Error::Terminated)));
        assert!(CrossSectionPoint::new(r(1, 2), r(3, 4), Sign::Plus).is_err());
    }

    #[test]
    fn return_time_example() {
        // oracle: 50-digit evaluation of the closed form
        let pt = CrossSectionPoint::new(r(2, 5), r(1, 3), Sign::Plus).unwrap();
        assert!((return_time(&pt).unwrap() - 1.716_993_602_242_573).abs() < 1e-13);
    }

    #[test]
    fn crossing_sequence_examples() {
        assert_eq!(crossing_sequence(rf(2, 5)).unwrap().len(), 1);
        let s = crossing_sequence(rf(113, 355)).unwrap();
        let ys: Vec<_> = s.iter().map(|c| c.point.y().clone()).collect();
        assert_eq!(ys, vec![r(16, 113), r(1, 16)]);
        let s = crossing_sequence(rf(3, 5)).unwrap();
        assert_eq!(s[0].point.y(), &r(1, 2));
    }

    #[test]
    fn exit_time_is_twice_log_q() {
        for (p, q) in [(113u64, 355u64), (3, 5), (7, 19), (12, 19), (1234, 4567)] {
            let s = crossing_sequence(rf(p, q)).unwrap();
            let lq2 = 2.0 * (q as f64).ln();
            assert!((exit_time(&s).unwrap() - lq2).abs() < 1e-10);
            assert!(s.last().unwrap().t <= lq2);
        }
    }

    #[test]
    fn exhaustive_section_invariants() {
        for q in 5..=500u64 {
            for p in 2..q - 1 {
                let Ok(x) = ReducedFraction::new(p, q) else { continue };
                if 2 * p == q {
                    continue;
                }
                let s = crossing_sequence(x).unwrap();
                let len = cfe_len(x);
                let expected = if 2 * p < q { len - 1 } else { len - 2 };
                assert_eq!(s.len(), expected, "{x}");
                // y-values are consecutive Gauss iterates
                let y0 = s[0].point.y_fraction().unwrap();
                let iter: Vec<_> = GaussOrbit::new(y0).map(|o| o.point).collect();
                for (c, y) in s.iter().zip(&iter) {
                    assert_eq!(c.point.y_fraction().unwrap(), *y);
                }
                let mut sum = 0.0;
                for w in s.windows(2) {
                    assert_eq!(w[1].point.eps(), w[0].point.eps().flip());
                    let rt = return_time(&w[0].point).unwrap();
                    assert!(rt > 0.0);
                    assert!((w[0].t + rt - departure_time(&w[1].point)).abs() < 1e-10);
                    sum += rt;
                }
                for c in &s {
                    let cap = (BigRational::one() + c.point.y()).recip();
                    assert!(c.point.z().is_positive() && c.point.z() <= &cap);
                    assert!(is_reduced(c.point.z()));
                }
                let (first, last) = (s[0].t, s.last().unwrap().t);
                assert!((last - first - sum).abs() < 1e-8);
                assert!(last <= 2.0 * (q as f64).ln() + 1e-12);
                assert!((exit_time(&s).unwrap() - 2.0 * (q as f64).ln()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn first_digit_determines_side() {
        for (p, q) in [(5u64, 13u64), (8, 13)] {
            let x = rf(p, q);
            let s = crossing_sequence(x).unwrap();
            let digits = cfe_digits(x);
            assert_eq!(digits.digits()[0] == 1, 2 * p > q);
            assert_eq!(s[0].point.eps() == Sign::Plus, 2 * p > q);
        }
    }

    #[test]
    fn numeric_detector_examples() {
        let d = detect_crossings_numeric(rf(2, 5), 1e-3).unwrap().crossings;
        assert_eq!(d.len(), 1);
        assert!((d[0].t - 5f64.ln()).abs() < 5e-3);
        assert!(detect_crossings_numeric(rf(1, 2), 1e-3).unwrap().crossings.is_empty());
        assert!(detect_crossings_numeric(rf(2, 5), 1e-2).is_err());
    }

    #[test]
    fn numeric_detector_matches_symbolic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 100 {
            let q = rng.gen_range(5..=1000u64);
            let p = rng.gen_range(2..q - 1);
            let Ok(x) = ReducedFraction::new(p, q) else { continue };
            if 2 * p == q {
                continue;
            }
            let sym = crossing_sequence(x).unwrap();
            let num = detect_crossings_numeric(x, 1e-3).unwrap().crossings;
            assert_eq!(sym.len(), num.len(), "{x}");
            for (s, n) in sym.iter().zip(&num) {
                assert!((s.t - n.t).abs() < 5e-3, "{x}: {} vs {}", s.t, n.t);
                assert_eq!(s.point.eps(), n.eps);
            }
            checked += 1;
        }
    }

    #[test]
    fn kappa_examples() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((kappa_quadrature() - 3.0 / pi2).abs() < 1e-12);
        assert!((kappa_quadrature() - 0.303_963_550_9).abs() < 1e-10);
        assert!((log_integral() / 4.0 - pi2 / 12.0).abs() < 1e-12);
        let c = 2.0 * LN_2 * kappa_quadrature();
        assert!((c - LN_2 / (pi2 / 6.0)).abs() < 1e-12);
        assert!((c - 0.421_382_956_636).abs() < 1e-11);
    }

    #[test]
    fn float_return_map_tracks_exact_one() {
        let pt = CrossSectionPoint::new(r(16, 113), r(113, 355), Sign::Plus).unwrap();
        let s = pt.to_sample();
        let rt = s.return_time().unwrap();
        assert!((rt - return_time(&pt).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn section_samples_lie_in_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let s = SectionSample::random(&mut rng);
            assert!(s.y > 0.0 && s.y < 1.0 && s.z > 0.0 && s.z <= 1.0 / (1.0 + s.y));
        }
    }

    #[test]
    fn haar_mean_return_time_small_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let st = mean_return_time_mc(&mut rng, 2000, 20);
        let target = haar_mean_return_time(3.0 / std::f64::consts::PI.powi(2));
        assert!((target - 2.373_138).abs() < 1e-6);
        assert!((st.mean / target - 1.0).abs() < 0.03, "{}", st.mean);
        assert!(st.min > 0.0);
    }
}
