//! Exact length and digit statistics over all `p` in `(Z/qZ)^x`.

use std::f64::consts::LN_2;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::ToPrimitive;

use super::measure::{ks_distance, Binning, EmpiricalMeasure, DEFAULT_BINS};
use crate::arith::Modulus;
use crate::cfe::DigitHistogram;
use crate::error::{Error, Result};
use crate::par::{chunked_reduce, DEFAULT_CHUNK};

/// `ln 2 / zeta(2)`, the limit of `len / (2 ln q)`.
pub fn heilbronn_ratio() -> f64 {
    LN_2 * 6.0 / (std::f64::consts::PI * std::f64::consts::PI)
}

pub const DIGIT_CAP: usize = 64;

/// Per-length orbit-point counts and digit counts; merging is integer addition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepAccumulator {
    bins: usize,
    /// `per_len[l]` holds the orbit-point bin counts of the fractions of length `l`.
    per_len: Vec<Vec<u64>>,
    /// Number of fractions of each length.
    len_counts: Vec<u64>,
    /// Digit-1 count summed over fractions of each length.
    ones_by_len: Vec<u64>,
    digits: DigitHistogram,
}

impl SweepAccumulator {
    pub fn new(bins: usize) -> Self {
        SweepAccumulator {
            bins,
            per_len: Vec::new(),
            len_counts: Vec::new(),
            ones_by_len: Vec::new(),
            digits: DigitHistogram::new(DIGIT_CAP).expect("positive cap"),
        }
    }

    fn grow(&mut self, len: usize) {
        while self.len_counts.len() <= len {
            self.per_len.push(vec![0; self.bins]);
            self.len_counts.push(0);
            self.ones_by_len.push(0);
        }
    }

    /// Adds the orbit of `p/q` (which need not be reduced-checked here: the
    /// caller passes coprime residues).
    pub fn record(&mut self, p: u64, q: u64) {
        let binning = Binning::unit(self.bins);
        let mut scratch = [0usize; 128];
        let (mut a, mut b) = (p, q);
        let mut len = 0;
        let mut ones = 0;
        while a != 0 {
            scratch[len] = binning.index_fraction(a, b);
            let d = b / a;
            self.digits.record(d);
            ones += u64::from(d == 1);
            let r = b % a;
            b = a;
            a = r;
            len += 1;
        }
        self.grow(len);
        for &i in &scratch[..len] {
            self.per_len[len][i] += 1;
        }
        self.len_counts[len] += 1;
        self.ones_by_len[len] += ones;
    }

    pub fn merge(mut self, other: SweepAccumulator) -> Result<Self> {
        if self.bins != other.bins {
            return Err(Error::Incompatible("different bin counts".into()));
        }
        self.grow(other.len_counts.len().saturating_sub(1));
        for (l, row) in other.per_len.iter().enumerate() {
            for (a, b) in self.per_len[l].iter_mut().zip(row) {
                *a += b;
            }
            self.len_counts[l] += other.len_counts[l];
            self.ones_by_len[l] += other.ones_by_len[l];
        }
        self.digits.merge(&other.digits)?;
        Ok(self)
    }

    pub fn count(&self) -> u64 {
        self.len_counts.iter().sum()
    }

    /// Number of fractions with each length, indexed by length.
    pub fn len_counts(&self) -> &[u64] {
        &self.len_counts
    }

    pub fn digits(&self) -> &DigitHistogram {
        &self.digits
    }

    fn len_lcm(&self) -> u128 {
        self.len_counts
            .iter()
            .enumerate()
            .filter(|&(l, &c)| l > 0 && c > 0)
            .fold(1u128, |acc, (l, _)| acc.lcm(&(l as u128)))
    }

    /// The average of the per-fraction measures `nu_{p/q}`, exact.
    pub fn nu_bar(&self) -> Result<EmpiricalMeasure> {
        let l = self.len_lcm();
        let n = self.count() as u128;
        let unit = l.checked_mul(n).ok_or(Error::Overflow("nu_bar unit"))?;
        let mut weights = vec![0u128; self.bins];
        for (len, row) in self.per_len.iter().enumerate().skip(1) {
            let f = l / len as u128;
            for (w, &c) in weights.iter_mut().zip(row) {
                *w += f * c as u128;
            }
        }
        EmpiricalMeasure::from_counts(Binning::unit(self.bins), weights, 0, unit)
    }

    /// Mean length as an exact ratio.
    pub fn mean_len_exact(&self) -> Ratio<u128> {
        let s: u128 = self.len_counts.iter().enumerate().map(|(l, &c)| l as u128 * c as u128).sum();
        Ratio::new(s, self.count() as u128)
    }

    /// Population variance of the length, exact.
    pub fn var_len_exact(&self) -> Ratio<u128> {
        let n = self.count() as u128;
        let s: u128 = self.len_counts.iter().enumerate().map(|(l, &c)| l as u128 * c as u128).sum();
        let s2: u128 = self.len_counts.iter().enumerate().map(|(l, &c)| (l * l) as u128 * c as u128).sum();
        Ratio::new(n * s2 - s * s, n * n)
    }

    /// Digit-1 frequency under `nu_bar`: the mean over `p` of the fraction of
    /// digits of `p/q` equal to 1.
    pub fn digit_one_frequency(&self) -> f64 {
        let l = self.len_lcm();
        let num: u128 = self
            .ones_by_len
            .iter()
            .enumerate()
            .skip(1)
            .map(|(len, &o)| o as u128 * (l / len as u128))
            .sum();
        num as f64 / (l as f64 * self.count() as f64)
    }

    /// Digit-1 frequency over all digits of all fractions pooled.
    pub fn digit_one_pooled(&self) -> f64 {
        self.digits.count(1) as f64 / self.digits.total() as f64
    }
}

/// Runs the sweep over `(Z/qZ)^x` with a deterministic parallel reduction.
pub fn sweep(m: &Modulus, bins: usize) -> Result<SweepAccumulator> {
    if m.q() < 3 {
        return Err(Error::OutOfRange("sweeps need q >= 3".into()));
    }
    let residues: Vec<u64> = m.coprime_residues().collect();
    let q = m.q();
    chunked_reduce(
        &residues,
        DEFAULT_CHUNK,
        Ok(SweepAccumulator::new(bins)),
        |chunk| {
            let mut acc = SweepAccumulator::new(bins);
            for &p in chunk {
                acc.record(p, q);
            }
            Ok(acc)
        },
        |a: Result<SweepAccumulator>, b| a?.merge(b?),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub q: u64,
    pub phi: u64,
    pub mean_len: f64,
    pub var_len: f64,
    /// `mean_len / (2 ln q)`.
    pub heilbronn_ratio: f64,
    pub digit_histogram: DigitHistogram,
    pub digit_one_frequency: f64,
    pub digit_one_pooled: f64,
    pub ks_to_gauss: f64,
    pub skipped_count: u64,
}

pub fn summarize(m: &Modulus, acc: &SweepAccumulator) -> Result<SweepSummary> {
    let mean = acc.mean_len_exact().to_f64().ok_or(Error::Overflow("mean"))?;
    let var = acc.var_len_exact().to_f64().ok_or(Error::Overflow("variance"))?;
    Ok(SweepSummary {
        q: m.q(),
        phi: acc.count(),
        mean_len: mean,
        var_len: var,
        heilbronn_ratio: mean / (2.0 * (m.q() as f64).ln()),
        digit_histogram: acc.digits().clone(),
        digit_one_frequency: acc.digit_one_frequency(),
        digit_one_pooled: acc.digit_one_pooled(),
        ks_to_gauss: ks_distance(&acc.nu_bar()?)?,
        skipped_count: 0,
    })
}

pub fn len_stats(m: &Modulus) -> Result<SweepSummary> {
    summarize(m, &sweep(m, DEFAULT_BINS)?)
}

pub fn nu_bar(m: &Modulus, bins: usize) -> Result<EmpiricalMeasure> {
    sweep(m, bins)?.nu_bar()
}

/// Fraction of `p` with `|len(p/q) / (2 ln q) - ln2/zeta(2)| > delta`.
pub fn dispersion_from(acc: &SweepAccumulator, q: u64, delta: f64) -> f64 {
    let lq2 = 2.0 * (q as f64).ln();
    let c = heilbronn_ratio();
    let far: u64 = acc
        .len_counts()
        .iter()
        .enumerate()
        .filter(|&(l, _)| (l as f64 / lq2 - c).abs() > delta)
        .map(|(_, &n)| n)
        .sum();
    far as f64 / acc.count() as f64
}

pub fn dispersion(m: &Modulus, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::OutOfRange(format!("delta = {delta} must be positive")));
    }
    Ok(dispersion_from(&sweep(m, 1)?, m.q(), delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfe::{cfe_digits, cfe_len, ReducedFraction};
    use crate::stats::measure::nu_pq;

    fn modulus(q: u64) -> Modulus {
        Modulus::new(q).unwrap()
    }

    #[test]
    fn len_stats_examples() {
        let s = len_stats(&modulus(5)).unwrap();
        assert_eq!(s.phi, 4);
        assert_eq!(s.mean_len, 2.0);
        assert_eq!(s.var_len, 0.5);
        assert!(s.mean_len <= 2.0 * 5f64.log2());
        assert_eq!(s.skipped_count, 0);
    }

    #[test]
    fn nu_bar_q5() {
        let m = nu_bar(&modulus(5), 8).unwrap();
        let mut manual = EmpiricalMeasure::zero(Binning::unit(8)).unwrap();
        for p in 1..5 {
            manual.merge(&nu_pq(ReducedFraction::new(p, 5).unwrap(), 8).unwrap()).unwrap();
        }
        assert_eq!(m.probabilities(), manual.probabilities());
        assert_eq!(m.total_mass(), Ratio::from_integer(1));
    }

    #[test]
    fn nu_bar_equals_merged_nu_pq() {
        for q in [97u64, 360, 1001] {
            let m = modulus(q);
            let fast = nu_bar(&m, 32).unwrap();
            let mut slow = EmpiricalMeasure::zero(Binning::unit(32)).unwrap();
            for p in m.coprime_residues() {
                slow.merge(&nu_pq(ReducedFraction::new(p, q).unwrap(), 32).unwrap()).unwrap();
            }
            assert_eq!(fast.probabilities(), slow.probabilities());
            assert_eq!(slow.total_mass(), Ratio::from_integer(m.euler_phi() as u128));
        }
    }

    #[test]
    fn moments_match_direct_computation() {
        for q in [101u64, 360, 2048] {
            let m = modulus(q);
            let lens: Vec<f64> = m.coprime_residues().map(|p| cfe_len(ReducedFraction::new(p, q).unwrap()) as f64).collect();
            let n = lens.len() as f64;
            let mean = lens.iter().sum::<f64>() / n;
            let var = lens.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
            let s = len_stats(&m).unwrap();
            assert!((s.mean_len - mean).abs() < 1e-12 && (s.var_len - var).abs() < 1e-10);
            let ones: f64 = m.coprime_residues().map(|p| {
                let d = cfe_digits(ReducedFraction::new(p, q).unwrap());
                d.digits().iter().filter(|&&a| a == 1).count() as f64 / d.len() as f64
            }).sum::<f64>() / n;
            assert!((s.digit_one_frequency - ones).abs() < 1e-12);
        }
    }

    #[test]
    fn dispersion_properties() {
        // Fibonacci ratios have len / (2 ln q) near 1 / (2 ln phi), which sits
        // 0.6177 above the limit; no fraction deviates further
        for q in 11..2000u64 {
            assert_eq!(dispersion(&modulus(q), 0.62).unwrap(), 0.0, "q={q}");
            assert_eq!(dispersion(&modulus(q), 1e9).unwrap(), 0.0);
        }
        assert!(dispersion(&modulus(4181), 0.5).unwrap() > 0.0);
        let acc = sweep(&modulus(10_007), 1).unwrap();
        let mut last = 1.0;
        for k in 1..40 {
            let d = dispersion_from(&acc, 10_007, k as f64 * 0.01);
            assert!(d <= last);
            last = d;
        }
        assert!(dispersion(&modulus(10), 0.0).is_err());
    }

    #[test]
    fn half_residues_close_to_full() {
        let q = 10_007u64;
        let m = modulus(q);
        let full = nu_bar(&m, 64).unwrap();
        let mut half = SweepAccumulator::new(64);
        for p in m.coprime_residues().filter(|&p| 2 * p < q) {
            half.record(p, q);
        }
        let h = half.nu_bar().unwrap();
        let ks = (0..=64).map(|k| (full.cdf_at_edge(k) - h.cdf_at_edge(k)).abs()).fold(0.0, f64::max);
        assert!(ks < 2.0 / (q as f64).ln(), "{ks}");
    }

    #[test]
    fn sweep_is_deterministic() {
        let m = modulus(65_537);
        assert_eq!(sweep(&m, 64).unwrap(), sweep(&m, 64).unwrap());
    }
}
