//! The Gauss-Kuzmin measure `((1 + s) ln 2)^{-1} ds` on `[0, 1]` in closed form.
//!
//! Intervals are treated as half-open `[a, b)`; endpoints carry no mass.

use std::f64::consts::LN_2;

use crate::cfe::{convergents, CfeWord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::OutOfRange(format!("[{a}, {b}] is not a subinterval of [0, 1]")));
        }
        Ok(Interval { a, b })
    }

    pub fn lower(&self) -> f64 {
        self.a
    }

    pub fn upper(&self) -> f64 {
        self.b
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x < self.b
    }
}

pub fn gauss_density(s: f64) -> f64 {
    1.0 / ((1.0 + s) * LN_2)
}

/// `log2(1 + x)`, the distribution function of the measure.
pub fn gauss_cdf(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

pub fn measure_interval(i: Interval) -> f64 {
    ((i.b - i.a) / (1.0 + i.a)).ln_1p() / LN_2
}

/// Probability that the first partial quotient equals `k`.
pub fn digit_probability(k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    (1.0 / (k * (k + 2.0))).ln_1p() / LN_2
}

/// Endpoints of the cylinder of `w` as exact fractions `(num, den)`, lower first.
pub fn cylinder_endpoints(w: &CfeWord) -> Result<((u64, u64), (u64, u64))> {
    let conv = convergents(w)?;
    let (pn, qn) = conv.last();
    let (pm, qm) = conv.penultimate();
    let mediant = (
        pn.checked_add(pm).ok_or(Error::Overflow("cylinder endpoint"))?,
        qn.checked_add(qm).ok_or(Error::Overflow("cylinder endpoint"))?,
    );
    // odd length: p_n/q_n is the upper endpoint
    if w.len() % 2 == 1 {
        Ok((mediant, (pn, qn)))
    } else {
        Ok(((pn, qn), mediant))
    }
}

/// Reals whose expansion starts with `w`.
pub fn cylinder_interval(w: &CfeWord) -> Result<Interval> {
    let ((la, lb), (ua, ub)) = cylinder_endpoints(w)?;
    Interval::new(la as f64 / lb as f64, ua as f64 / ub as f64)
}

/// Gauss measure of the cylinder of `w`, computed from the integer endpoints
/// so that tiny cylinders keep full relative precision.
pub fn cylinder_measure(w: &CfeWord) -> Result<f64> {
    let ((la, lb), (ua, ub)) = cylinder_endpoints(w)?;
    // (1 + u) / (1 + l) = (ub + ua) lb / ((lb + la) ub)
    let num = (ub as u128 + ua as u128) * lb as u128;
    let den = (lb as u128 + la as u128) * ub as u128;
    let diff = num - den;
    Ok((diff as f64 / den as f64).ln_1p() / LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn word(d: &[u64]) -> CfeWord {
        CfeWord::new(d.to_vec()).unwrap()
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn density_examples() {
        assert!((gauss_density(0.0) - 1.442_695_040_888_963).abs() < TOL);
        assert!((gauss_density(1.0) - 0.721_347_520_444_481_7).abs() < TOL);
        assert!((simpson(gauss_density, 0.0, 1.0, 2000) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_examples() {
        assert!((measure_interval(Interval::new(0.0, 1.0).unwrap()) - 1.0).abs() < TOL);
        let lo = measure_interval(Interval::new(0.0, 0.5).unwrap());
        let hi = measure_interval(Interval::new(0.5, 1.0).unwrap());
        assert!((lo - 1.5f64.log2()).abs() < TOL);
        assert!((hi - (4.0f64 / 3.0).log2()).abs() < TOL);
        assert!((lo - 0.584_962_500_721_156).abs() < 1e-12);
        assert!((hi - 0.415_037_499_278_843_8).abs() < 1e-12);
        assert!(Interval::new(0.6, 0.5).is_err());
        assert!(Interval::new(-0.1, 0.5).is_err());
    }

    #[test]
    fn measure_matches_quadrature() {
        for &(a, b) in &[(0.1, 0.3), (0.25, 0.9), (0.0, 0.01)] {
            let q = simpson(gauss_density, a, b, 2000);
            assert!((measure_interval(Interval::new(a, b).unwrap()) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn digit_probability_examples() {
        assert!((digit_probability(1) - (4.0f64 / 3.0).log2()).abs() < TOL);
        assert!((digit_probability(2) - (9.0f64 / 8.0).log2()).abs() < TOL);
        let partial: f64 = (1..=1_000_000u64).map(digit_probability).sum();
        assert!((partial - 1.0).abs() < 2e-6);
        // the tail beyond N is log2(1 + 1/(N+1))
        let tail = gauss_cdf(1.0 / 1_000_001.0);
        assert!((partial + tail - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_examples() {
        let c1 = cylinder_interval(&word(&[1])).unwrap();
        assert_eq!((c1.lower(), c1.upper()), (0.5, 1.0));
        let c2 = cylinder_interval(&word(&[2])).unwrap();
        assert!((c2.lower() - 1.0 / 3.0).abs() < TOL && c2.upper() == 0.5);
        assert!((cylinder_measure(&word(&[2])).unwrap() - (9.0f64 / 8.0).log2()).abs() < TOL);
        let c12 = cylinder_endpoints(&word(&[1, 2])).unwrap();
        assert_eq!(c12, ((2, 3), (3, 4)));
        assert!((cylinder_measure(&word(&[1, 2])).unwrap() - (21.0f64 / 20.0).log2()).abs() < TOL);
    }

    #[test]
    fn single_digit_cylinders_match_digit_probability() {
        for k in 1..=100u64 {
            let w = word(&[k]);
            assert!((cylinder_measure(&w).unwrap() - digit_probability(k)).abs() < TOL);
            let i = cylinder_interval(&w).unwrap();
            assert!((measure_interval(i) - digit_probability(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_additivity() {
        for prefix in [vec![1], vec![2], vec![1, 1], vec![3, 1, 2], vec![1, 4, 1, 1]] {
            let parent = cylinder_measure(&word(&prefix)).unwrap();
            let n = 2000u64;
            let children: f64 = (1..=n)
                .map(|k| {
                    let mut w = prefix.clone();
                    w.push(k);
                    cylinder_measure(&word(&w)).unwrap()
                })
                .sum();
            // children with next digit > n fill the interval between p_m/q_m and
            // ((n+1) p_m + p_{m-1}) / ((n+1) q_m + q_{m-1})
            let conv = convergents(&word(&prefix)).unwrap();
            let (pm, qm) = conv.last();
            let (pp, qp) = conv.penultimate();
            let far = (pm as f64) / (qm as f64);
            let near = ((n + 1) * pm + pp) as f64 / ((n + 1) * qm + qp) as f64;
            let tail = measure_interval(Interval::new(far.min(near), far.max(near)).unwrap());
            assert!((children + tail - parent).abs() < 1e-9, "{prefix:?}");
        }
    }

    #[test]
    fn endpoint_order_matches_membership() {
        use crate::cfe::{cfe_digits, ReducedFraction};
        // brute-force membership: sample fractions and check which cylinders contain them
        let words: Vec<Vec<u64>> = vec![vec![1], vec![3], vec![1, 2], vec![2, 1], vec![2, 3, 1], vec![1, 1, 1, 2]];
        for d in words {
            let w = word(&d);
            let ((la, lb), (ua, ub)) = cylinder_endpoints(&w).unwrap();
            for q in 2..400u64 {
                for p in 1..q {
                    let Ok(x) = ReducedFraction::new(p, q) else { continue };
                    let digits = cfe_digits(x);
                    let dg = digits.digits();
                    // interior points only; endpoints are measure zero
                    let above = p as u128 * lb as u128 > la as u128 * q as u128;
                    let below = (p as u128) * (ub as u128) < (ua as u128) * (q as u128);
                    let inside = above && below;
                    let starts = dg.len() > d.len() && dg[..d.len()] == d[..];
                    assert_eq!(inside, starts, "{x} vs cylinder {d:?}");
                }
            }
        }
    }
}
