//! Histogram measures with exact rational accounting.
//!
//! Bin `i` carries mass `weights[i] / unit`. Weights are integers, so merging
//! is exactly associative and commutative. Bins are half-open `[a, b)` except
//! the last, which is closed.

use num_integer::Integer;
use num_rational::Ratio;

use crate::cfe::{GaussOrbit, ReducedFraction};
use crate::error::{Error, Result};
use crate::gaussmeasure::gauss_cdf;

pub const DEFAULT_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Binning {
    pub fn unit(bins: usize) -> Self {
        Binning { lo: 0.0, hi: 1.0, bins }
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / self.bins as f64
    }

    /// Bin of a real value; `None` outside `[lo, hi]`.
    pub fn index(&self, v: f64) -> Option<usize> {
        if !(self.lo..=self.hi).contains(&v) {
            return None;
        }
        let i = ((v - self.lo) / (self.hi - self.lo) * self.bins as f64).floor() as usize;
        Some(i.min(self.bins - 1))
    }

    /// Exact bin of a fraction in `[0, 1]` for the unit binning.
    pub fn index_fraction(&self, num: u64, den: u64) -> usize {
        let i = (self.bins as u128 * num as u128 / den as u128) as usize;
        i.min(self.bins - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalMeasure {
    lo_bits: u64,
    hi_bits: u64,
    weights: Vec<u128>,
    /// Mass that fell outside `[lo, hi]`.
    outside: u128,
    unit: u128,
}

impl EmpiricalMeasure {
    pub fn zero(binning: Binning) -> Result<Self> {
        if binning.bins == 0 || !(binning.lo < binning.hi) {
            return Err(Error::OutOfRange(format!("invalid binning {binning:?}")));
        }
        Ok(EmpiricalMeasure {
            lo_bits: binning.lo.to_bits(),
            hi_bits: binning.hi.to_bits(),
            weights: vec![0; binning.bins],
            outside: 0,
            unit: 1,
        })
    }

    /// Integer counts with mass `count / unit`.
    pub fn from_counts(binning: Binning, weights: Vec<u128>, outside: u128, unit: u128) -> Result<Self> {
        let mut m = Self::zero(binning)?;
        if weights.len() != binning.bins || unit == 0 {
            return Err(Error::Incompatible("counts do not match binning".into()));
        }
        m.weights = weights;
        m.outside = outside;
        m.unit = unit;
        Ok(m)
    }

    pub fn binning(&self) -> Binning {
        Binning { lo: f64::from_bits(self.lo_bits), hi: f64::from_bits(self.hi_bits), bins: self.weights.len() }
    }

    pub fn weights(&self) -> &[u128] {
        &self.weights
    }

    pub fn unit(&self) -> u128 {
        self.unit
    }

    pub fn outside(&self) -> u128 {
        self.outside
    }

    fn weight_sum(&self) -> u128 {
        self.weights.iter().sum::<u128>() + self.outside
    }

    /// Total mass as an exact ratio.
    pub fn total_mass(&self) -> Ratio<u128> {
        Ratio::new(self.weight_sum(), self.unit)
    }

    pub fn mass(&self, i: usize) -> Ratio<u128> {
        Ratio::new(self.weights[i], self.unit)
    }

    /// Bin masses divided by the total mass.
    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.weight_sum() as f64;
        self.weights.iter().map(|&w| w as f64 / total).collect()
    }

    /// Normalized mass of the bins `[0, k)`.
    pub fn cdf_at_edge(&self, k: usize) -> f64 {
        let below: u128 = self.weights[..k].iter().sum();
        below as f64 / self.weight_sum() as f64
    }

    fn rescale(&mut self, unit: u128) -> Result<()> {
        let f = unit / self.unit;
        for w in &mut self.weights {
            *w = w.checked_mul(f).ok_or(Error::Overflow("measure weight"))?;
        }
        self.outside = self.outside.checked_mul(f).ok_or(Error::Overflow("measure weight"))?;
        self.unit = unit;
        Ok(())
    }

    /// Adds the masses of `other` into `self`.
    pub fn merge(&mut self, other: &EmpiricalMeasure) -> Result<()> {
        if self.binning() != other.binning() {
            return Err(Error::Incompatible("different binnings".into()));
        }
        let unit = self.unit.lcm(&other.unit);
        self.rescale(unit)?;
        let f = unit / other.unit;
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            let add = o.checked_mul(f).ok_or(Error::Overflow("measure weight"))?;
            *w = w.checked_add(add).ok_or(Error::Overflow("measure weight"))?;
        }
        let add = other.outside.checked_mul(f).ok_or(Error::Overflow("measure weight"))?;
        self.outside = self.outside.checked_add(add).ok_or(Error::Overflow("measure weight"))?;
        Ok(())
    }
}

/// `(1/len) sum_i delta_{T^i(x)}` over the Gauss orbit of `x`.
pub fn nu_pq(x: ReducedFraction, bins: usize) -> Result<EmpiricalMeasure> {
    let binning = Binning::unit(bins);
    let mut m = EmpiricalMeasure::zero(binning)?;
    let mut len = 0u128;
    for step in GaussOrbit::new(x) {
        m.weights[binning.index_fraction(step.point.numer(), step.point.denom())] += 1;
        len += 1;
    }
    m.unit = len;
    Ok(m)
}

/// Kolmogorov distance to the Gauss measure over the bin edges of a unit binning.
pub fn ks_distance(e: &EmpiricalMeasure) -> Result<f64> {
    let b = e.binning();
    if b.lo != 0.0 || b.hi != 1.0 {
        return Err(Error::Incompatible("Gauss reference needs a [0, 1] binning".into()));
    }
    Ok((0..=b.bins).map(|k| (e.cdf_at_edge(k) - gauss_cdf(b.edge(k))).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rf(p: u64, q: u64) -> ReducedFraction {
        ReducedFraction::new(p, q).unwrap()
    }

    #[test]
    fn nu_pq_examples() {
        let m = nu_pq(rf(2, 3), 2).unwrap();
        assert_eq!(m.weights(), &[0, 2]);
        assert_eq!(m.total_mass(), Ratio::from_integer(1));
        assert_eq!(m.probabilities(), vec![0.0, 1.0]);
        let m = nu_pq(rf(1, 5), 5).unwrap();
        assert_eq!(m.weights(), &[0, 1, 0, 0, 0]);
        assert_eq!(m.mass(1), Ratio::from_integer(1));
    }

    #[test]
    fn total_mass_is_one() {
        for q in 2..200u64 {
            for p in 1..q {
                if let Ok(x) = ReducedFraction::new(p, q) {
                    assert_eq!(nu_pq(x, 16).unwrap().total_mass(), Ratio::from_integer(1));
                }
            }
        }
    }

    #[test]
    fn ks_examples() {
        let b = Binning::unit(64);
        let w: Vec<u128> = (0..64).map(|i| {
            let p = gauss_cdf(b.edge(i + 1)) - gauss_cdf(b.edge(i));
            (p * 1e15).round() as u128
        }).collect();
        let near = EmpiricalMeasure::from_counts(b, w, 0, 1).unwrap();
        assert!(ks_distance(&near).unwrap() < 1e-12);
        let mut atom = vec![0u128; 64];
        atom[0] = 1;
        let atom = EmpiricalMeasure::from_counts(b, atom, 0, 1).unwrap();
        let d = ks_distance(&atom).unwrap();
        assert!((d - (1.0 - gauss_cdf(1.0 / 64.0))).abs() < 1e-15);
        assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn merge_rejects_mismatch() {
        let mut a = EmpiricalMeasure::zero(Binning::unit(4)).unwrap();
        let b = EmpiricalMeasure::zero(Binning::unit(8)).unwrap();
        assert!(a.merge(&b).is_err());
    }

    #[test]
    fn binning_conventions() {
        let b = Binning::unit(4);
        assert_eq!(b.index(0.25), Some(1));
        assert_eq!(b.index(1.0), Some(3));
        assert_eq!(b.index(1.5), None);
        assert_eq!(b.index_fraction(1, 4), 1);
        assert_eq!(b.index_fraction(1, 1), 3);
    }

    proptest! {
        #[test]
        fn merge_is_order_independent(pairs in prop::collection::vec((1u64..500, 2u64..500), 1..30)) {
            let ms: Vec<_> = pairs.iter().filter_map(|&(p, q)| ReducedFraction::new(p % q, q).ok())
                .filter(|x| x.numer() > 0)
                .map(|x| nu_pq(x, 32).unwrap()).collect();
            prop_assume!(!ms.is_empty());
            let mut fwd = EmpiricalMeasure::zero(Binning::unit(32)).unwrap();
            for m in &ms { fwd.merge(m).unwrap(); }
            let mut rev = EmpiricalMeasure::zero(Binning::unit(32)).unwrap();
            for m in ms.iter().rev() { rev.merge(m).unwrap(); }
            // pairwise tree order
            let mut level = ms.clone();
            while level.len() > 1 {
                level = level.chunks(2).map(|c| {
                    let mut a = c[0].clone();
                    if let Some(b) = c.get(1) { a.merge(b).unwrap(); }
                    a
                }).collect();
            }
            let mut tree = EmpiricalMeasure::zero(Binning::unit(32)).unwrap();
            tree.merge(&level[0]).unwrap();
            prop_assert_eq!(fwd.total_mass(), rev.total_mass());
            prop_assert_eq!(fwd.probabilities(), rev.probabilities());
            prop_assert_eq!(fwd.probabilities(), tree.probabilities());
            prop_assert_eq!(fwd.total_mass(), Ratio::from_integer(ms.len() as u128));
        }
    }
}
