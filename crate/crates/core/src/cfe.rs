//! Exact Gauss-map dynamics on rationals in `(0, 1)`.
//!
//! A reduced fraction `p/q` has the finite expansion `[0; a_1, ..., a_n]`
//! obtained by iterating `T(s) = 1/s - floor(1/s)` until it hits zero. The
//! canonical word never ends in `1` when `n >= 2`.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};

/// `p/q` in lowest terms with `0 < p < q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReducedFraction {
    p: u64,
    q: u64,
}

impl ReducedFraction {
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if p == 0 || p >= q {
            return Err(Error::OutOfRange(format!("{p}/{q} is not in (0, 1)")));
        }
        if p.gcd(&q) != 1 {
            return Err(Error::NotReduced { p, q });
        }
        Ok(ReducedFraction { p, q })
    }

    /// Reduces `p/q` to lowest terms first.
    pub fn reduce(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::OutOfRange("zero denominator".into()));
        }
        let g = p.gcd(&q).max(1);
        Self::new(p / g, q / g)
    }

    pub fn numer(&self) -> u64 {
        self.p
    }

    pub fn denom(&self) -> u64 {
        self.q
    }

    pub fn to_f64(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn to_ratio(&self) -> Ratio<u64> {
        Ratio::new_raw(self.p, self.q)
    }

    /// `1 - x`.
    pub fn complement(&self) -> Self {
        ReducedFraction { p: self.q - self.p, q: self.q }
    }

    /// Compares against `1/2` without division.
    pub fn cmp_half(&self) -> Ordering {
        (2 * self.p as u128).cmp(&(self.q as u128))
    }
}

impl PartialOrd for ReducedFraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ReducedFraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.p as u128 * other.q as u128).cmp(&(other.p as u128 * self.q as u128))
    }
}

impl fmt::Display for ReducedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// Image of the Gauss map: either a fraction in `(0, 1)` or the terminal zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussImage {
    Zero,
    Fraction(ReducedFraction),
}

impl GaussImage {
    pub fn fraction(self) -> Option<ReducedFraction> {
        match self {
            GaussImage::Zero => None,
            GaussImage::Fraction(x) => Some(x),
        }
    }
}

pub fn gauss_map(x: ReducedFraction) -> GaussImage {
    let r = x.q % x.p;
    if r == 0 {
        GaussImage::Zero
    } else {
        // gcd(r, p) = gcd(q, p) = 1
        GaussImage::Fraction(ReducedFraction { p: r, q: x.p })
    }
}

/// One point `T^i(x)` of a Gauss orbit together with the digit it emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrbitStep {
    pub point: ReducedFraction,
    pub digit: u64,
}

/// Iterates `x, T(x), T^2(x), ...` up to the last nonzero point.
#[derive(Debug, Clone)]
pub struct GaussOrbit {
    p: u64,
    q: u64,
}

impl GaussOrbit {
    pub fn new(x: ReducedFraction) -> Self {
        GaussOrbit { p: x.p, q: x.q }
    }
}

impl Iterator for GaussOrbit {
    type Item = OrbitStep;

    fn next(&mut self) -> Option<OrbitStep> {
        if self.p == 0 {
            return None;
        }
        let point = ReducedFraction { p: self.p, q: self.q };
        let digit = self.q / self.p;
        let r = self.q % self.p;
        self.q = self.p;
        self.p = r;
        Some(OrbitStep { point, digit })
    }
}

/// A nonempty word of positive partial quotients.
///
/// Any such word names a cylinder set; only canonical words (last digit at
/// least 2 when the length is at least 2) are expansions of fractions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CfeWord(Vec<u64>);

impl CfeWord {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::EmptyWord);
        }
        if digits.contains(&0) {
            return Err(Error::ZeroDigit);
        }
        Ok(CfeWord(digits))
    }

    /// Like [`CfeWord::new`] but also rejects non-canonical words.
    pub fn canonical(digits: Vec<u64>) -> Result<Self> {
        let w = Self::new(digits)?;
        if !w.is_canonical() {
            return Err(Error::NonCanonicalWord);
        }
        Ok(w)
    }

    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_canonical(&self) -> bool {
        self.0.len() < 2 || *self.0.last().unwrap() >= 2
    }

    pub fn into_digits(self) -> Vec<u64> {
        self.0
    }
}

impl fmt::Display for CfeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Partial quotients of `p/q` for any integer type (e.g. `BigUint`).
///
/// Returns the digits `a_1, a_2, ...` of `p/q` with `0 < p < q`; the integer
/// part is not included.
pub fn euclid_digits<T: Integer + Clone>(p: T, q: T) -> Vec<T> {
    let mut digits = Vec::new();
    let (mut a, mut b) = (p, q);
    while !a.is_zero() {
        let (d, r) = b.div_rem(&a);
        digits.push(d);
        b = a;
        a = r;
    }
    digits
}

pub fn cfe_digits(x: ReducedFraction) -> CfeWord {
    CfeWord(GaussOrbit::new(x).map(|s| s.digit).collect())
}

/// Number of Gauss-map steps until zero; allocation free.
pub fn cfe_len(x: ReducedFraction) -> usize {
    let (mut a, mut b) = (x.p, x.q);
    let mut n = 0;
    while a != 0 {
        let r = b % a;
        b = a;
        a = r;
        n += 1;
    }
    n
}

pub fn from_digits(w: &CfeWord) -> Result<ReducedFraction> {
    if !w.is_canonical() {
        return Err(Error::NonCanonicalWord);
    }
    let (p, q) = convergents(w)?.last();
    ReducedFraction::new(p, q)
}

/// Convergents `(p_k, q_k)` for `k = 0..=n` with `(p_0, q_0) = (0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergentList(Vec<(u64, u64)>);

impl ConvergentList {
    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.0
    }

    pub fn denominators(&self) -> Vec<u64> {
        self.0.iter().map(|&(_, q)| q).collect()
    }

    pub fn last(&self) -> (u64, u64) {
        *self.0.last().expect("convergent list is never empty")
    }

    /// `(p_{n-1}, q_{n-1})`, with `(1, 0)` standing in for index `-1`.
    pub fn penultimate(&self) -> (u64, u64) {
        let n = self.0.len();
        if n >= 2 {
            self.0[n - 2]
        } else {
            (1, 0)
        }
    }
}

pub fn convergents(w: &CfeWord) -> Result<ConvergentList> {
    let mut out = Vec::with_capacity(w.len() + 1);
    let (mut pm, mut qm) = (1u64, 0u64);
    let (mut pk, mut qk) = (0u64, 1u64);
    out.push((pk, qk));
    for &a in w.digits() {
        let pn = a
            .checked_mul(pk)
            .and_then(|v| v.checked_add(pm))
            .ok_or(Error::Overflow("convergent numerator"))?;
        let qn = a
            .checked_mul(qk)
            .and_then(|v| v.checked_add(qm))
            .ok_or(Error::Overflow("convergent denominator"))?;
        pm = pk;
        qm = qk;
        pk = pn;
        qk = qn;
        out.push((pk, qk));
    }
    Ok(ConvergentList(out))
}

/// Digit counts `1..=cap` plus an overflow bucket for digits above `cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitHistogram {
    counts: Vec<u64>,
    overflow: u64,
}

impl DigitHistogram {
    pub fn new(cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::OutOfRange("histogram cap must be >= 1".into()));
        }
        Ok(DigitHistogram { counts: vec![0; cap], overflow: 0 })
    }

    pub fn cap(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, digit: u64) {
        match self.counts.get_mut((digit as usize).wrapping_sub(1)) {
            Some(c) => *c += 1,
            None => self.overflow += 1,
        }
    }

    /// Count for digit `k` (1-based); 0 outside `1..=cap`.
    pub fn count(&self, k: u64) -> u64 {
        if k == 0 {
            return 0;
        }
        self.counts.get(k as usize - 1).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn merge(&mut self, other: &DigitHistogram) -> Result<()> {
        if other.cap() != self.cap() {
            return Err(Error::Incompatible("digit histogram caps differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
        Ok(())
    }
}

pub fn digit_histogram(w: &CfeWord, cap: usize) -> Result<DigitHistogram> {
    let mut h = DigitHistogram::new(cap)?;
    for &d in w.digits() {
        h.record(d);
    }
    Ok(h)
}

/// Sliding-window occurrences of `w` in the expansion of `x`, over `len(x)`.
pub fn word_frequency(x: ReducedFraction, w: &CfeWord) -> Ratio<u64> {
    let digits = cfe_digits(x);
    let hits = digits
        .digits()
        .windows(w.len())
        .filter(|win| *win == w.digits())
        .count() as u64;
    Ratio::new(hits, digits.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn rf(p: u64, q: u64) -> ReducedFraction {
        ReducedFraction::new(p, q).unwrap()
    }

    fn word(d: &[u64]) -> CfeWord {
        CfeWord::new(d.to_vec()).unwrap()
    }

    #[test]
    fn reduced_fraction_validation() {
        assert!(ReducedFraction::new(2, 4).is_err());
        assert!(ReducedFraction::new(0, 4).is_err());
        assert!(ReducedFraction::new(4, 4).is_err());
        assert!(ReducedFraction::new(5, 4).is_err());
        assert_eq!(ReducedFraction::reduce(2, 4).unwrap(), rf(1, 2));
    }

    #[test]
    fn gauss_map_examples() {
        assert_eq!(gauss_map(rf(2, 3)), GaussImage::Fraction(rf(1, 2)));
        assert_eq!(gauss_map(rf(1, 7)), GaussImage::Zero);
        assert_eq!(gauss_map(rf(5, 8)), GaussImage::Fraction(rf(3, 5)));
    }

    #[test]
    fn digits_examples() {
        assert_eq!(cfe_digits(rf(2, 3)).digits(), &[1, 2]);
        assert_eq!(cfe_digits(rf(113, 355)).digits(), &[3, 7, 16]);
        assert_eq!(cfe_digits(rf(1, 5)).digits(), &[5]);
        assert_eq!(cfe_len(rf(2, 3)), 2);
        assert_eq!(cfe_len(rf(1, 99)), 1);
        assert_eq!(cfe_len(rf(113, 355)), 3);
    }

    #[test]
    fn from_digits_examples() {
        assert_eq!(from_digits(&word(&[1, 2])).unwrap(), rf(2, 3));
        assert_eq!(from_digits(&word(&[5])).unwrap(), rf(1, 5));
        assert_eq!(from_digits(&word(&[3, 7, 16])).unwrap(), rf(113, 355));
        assert!(matches!(from_digits(&word(&[2, 1])), Err(Error::NonCanonicalWord)));
        assert!(CfeWord::canonical(vec![3, 1]).is_err());
        assert!(CfeWord::new(vec![]).is_err());
        assert!(CfeWord::new(vec![1, 0, 2]).is_err());
    }

    #[test]
    fn convergents_examples() {
        assert_eq!(convergents(&word(&[3, 7, 16])).unwrap().denominators(), vec![1, 3, 22, 355]);
        assert_eq!(convergents(&word(&[2])).unwrap().denominators(), vec![1, 2]);
        assert_eq!(convergents(&word(&[1, 2])).unwrap().denominators(), vec![1, 1, 3]);
        let huge = word(&[u64::MAX, u64::MAX]);
        assert!(matches!(convergents(&huge), Err(Error::Overflow(_))));
    }

    #[test]
    fn histogram_examples() {
        let h = digit_histogram(&word(&[1, 2]), 5).unwrap();
        assert_eq!((h.count(1), h.count(2), h.overflow()), (1, 1, 0));
        let h = digit_histogram(&word(&[3, 7, 16]), 5).unwrap();
        assert_eq!((h.count(3), h.overflow(), h.total()), (1, 2, 3));
        let h = digit_histogram(&word(&[1, 1, 1, 2]), 2).unwrap();
        assert_eq!((h.count(1), h.count(2), h.overflow()), (3, 1, 0));
        // the oracle: [1,1,1,2] is the expansion of 5/8
        assert_eq!(from_digits(&word(&[1, 1, 1, 2])).unwrap(), rf(5, 8));
        assert!(digit_histogram(&word(&[1]), 0).is_err());
    }

    #[test]
    fn word_frequency_examples() {
        assert_eq!(word_frequency(rf(2, 3), &word(&[1])), Ratio::new(1, 2));
        assert_eq!(word_frequency(rf(2, 3), &word(&[7])), Ratio::new(0, 1));
        assert_eq!(word_frequency(rf(113, 355), &word(&[3, 7])), Ratio::new(1, 3));
        assert_eq!(word_frequency(rf(1, 3), &word(&[3, 7])), Ratio::new(0, 1));
    }

    #[test]
    fn big_integer_digits() {
        let p = BigUint::from(113u32);
        let q = BigUint::from(355u32);
        let d: Vec<u64> = euclid_digits(p, q)
            .into_iter()
            .map(|b| u64::try_from(b).unwrap())
            .collect();
        assert_eq!(d, vec![3, 7, 16]);
        // F_{200}/F_{201} expands to [1, 1, ..., 1, 2]
        let (mut a, mut b) = (BigUint::from(1u32), BigUint::from(1u32));
        for _ in 0..199 {
            let c = &a + &b;
            a = b;
            b = c;
        }
        let d = euclid_digits(a, b);
        assert_eq!(d.len(), 199);
        assert_eq!(d.last().unwrap(), &BigUint::from(2u32));
    }

    #[test]
    fn round_trip_and_length_bound_exhaustive() {
        for q in 2..=5000u64 {
            for p in 1..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let x = rf(p, q);
                let w = cfe_digits(x);
                assert!(w.is_canonical());
                assert_eq!(w.len(), cfe_len(x));
                assert_eq!(from_digits(&w).unwrap(), x);
                assert!(w.len() as f64 <= 2.0 * (q as f64).log2(), "{x}");
                let conv = convergents(&w).unwrap();
                assert_eq!(conv.last(), (p, q));
            }
        }
    }

    #[test]
    fn convergent_gap_bound() {
        for q in 2..=400u64 {
            for p in 1..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let w = cfe_digits(rf(p, q));
                let conv = convergents(&w).unwrap();
                let pairs = conv.pairs();
                for k in 0..w.len() {
                    let (pk, qk) = pairs[k];
                    let qk1 = pairs[k + 1].1;
                    // |p/q - pk/qk| = |p qk - pk q| / (q qk) > 1/(2 qk1 qk)
                    let num = (p as i128 * qk as i128 - pk as i128 * q as i128).abs();
                    assert!(2 * num * qk1 as i128 > q as i128, "{p}/{q} k={k}");
                    if k >= 1 {
                        assert!(qk1 > qk);
                    }
                    assert_eq!(pk.gcd(&qk), 1);
                }
            }
        }
    }

    #[test]
    fn shift_property() {
        for q in 2..=600u64 {
            for p in 1..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let x = rf(p, q);
                let w = cfe_digits(x);
                if let GaussImage::Fraction(y) = gauss_map(x) {
                    assert_eq!(cfe_digits(y).digits(), &w.digits()[1..]);
                } else {
                    assert_eq!(w.len(), 1);
                }
            }
        }
    }

    #[test]
    fn second_iterate_equals_map_of_complement() {
        for q in 3..=2000u64 {
            for p in (q / 2 + 1)..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let x = rf(p, q);
                let t2 = gauss_map(x).fraction().map(gauss_map);
                let t2 = t2.unwrap_or(GaussImage::Zero);
                assert_eq!(t2, gauss_map(x.complement()), "{x}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn digits_round_trip(digits in proptest::collection::vec(1u64..50, 1..12), last in 2u64..50) {
            let mut d = digits;
            d.push(last);
            let w = CfeWord::canonical(d.clone()).unwrap();
            let x = from_digits(&w).unwrap();
            proptest::prop_assert_eq!(cfe_digits(x).into_digits(), d);
        }

        #[test]
        fn gauss_map_shifts_digits(q in 3u64..1_000_000, seed in proptest::num::u64::ANY) {
            let p = 1 + seed % (q - 1);
            proptest::prop_assume!(p.gcd(&q) == 1);
            let x = rf(p, q);
            let d = cfe_digits(x).into_digits();
            match gauss_map(x) {
                GaussImage::Zero => proptest::prop_assert_eq!(d.len(), 1),
                GaussImage::Fraction(y) => {
                    proptest::prop_assert!(y.denom() < x.denom());
                    proptest::prop_assert_eq!(cfe_digits(y).into_digits(), d[1..].to_vec());
                }
            }
        }
    }
}
