//! Exact counting of the `p` whose orbit point at time `t` lies high in the cusp.
//!
//! The orbit point `x_0 u_{p/q} a(t)` has a vector of length at most `1/M`
//! exactly when some `m >= 1` and `k = m p (mod q)` satisfy
//! `m^2 e^{-t} + k^2 e^t / q^2 <= 1 / M^2`. The test runs in double precision
//! and falls back to rigorous interval bounds on `e^t` when the relative
//! margin is below `2^-40`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::Modulus;
use crate::error::{Error, Result};

const MARGIN: f64 = 1.0 / (1u64 << 40) as f64;
const MAX_PRECISION: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct MassEscapeReport {
    pub q: u64,
    pub big_m: f64,
    pub t: f64,
    pub phi: u64,
    pub count: u64,
    /// `(4 / M^2) phi(q)`.
    pub bound: f64,
    pub within_bound: bool,
    /// Whether `0 <= t <= ln q - 2 omega(q)`.
    pub in_hypothesis: bool,
    /// Comparisons decided by interval arithmetic.
    pub escalations: u64,
}

fn exact_f64(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

fn shift_floor(n: &BigInt, s: i64) -> BigInt {
    if s >= 0 {
        n << s as u64
    } else {
        // arithmetic shift floors for negatives too
        n >> (-s) as u64
    }
}

fn shift_ceil(n: &BigInt, s: i64) -> BigInt {
    if s >= 0 {
        n << s as u64
    } else {
        -shift_floor(&-n, s)
    }
}

fn div_ceil(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = (a / b, a % b);
    if r.is_positive() {
        q + 1
    } else {
        q
    }
}

/// Bounds `lo <= e^t 2^prec <= hi` for `t >= 0`.
pub fn exp_bounds(t: f64, prec: u64) -> Result<(BigInt, BigInt)> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("exp bounds need finite t >= 0, got {t}")));
    }
    let one = BigInt::one() << prec;
    if t == 0.0 {
        return Ok((one.clone(), one));
    }
    let r = exact_f64(t);
    // t = n / 2^d with n, d integers
    let (n, d) = (r.numer().clone(), r.denom().bits() as i64 - 1);
    let halvings = (t.log2().ceil() as i64 + 1).max(0);
    let shift = prec as i64 - d - halvings;
    let x_lo = shift_floor(&n, shift);
    let x_hi = shift_ceil(&n, shift);
    let mut lo_sum = &one + &x_lo;
    let mut hi_sum = &one + &x_hi;
    let (mut lo_term, mut hi_term) = (x_lo.clone(), x_hi.clone());
    let mut k = 2u64;
    while hi_term > BigInt::one() {
        lo_term = (&lo_term * &x_lo) / (BigInt::from(k) << prec);
        hi_term = div_ceil(&(&hi_term * &x_hi), &(BigInt::from(k) << prec));
        lo_sum += &lo_term;
        hi_sum += &hi_term;
        k += 1;
    }
    // terms at least halve from here on, so the tail is below the last term
    hi_sum += &hi_term + 1;
    for _ in 0..halvings {
        lo_sum = (&lo_sum * &lo_sum) >> prec;
        hi_sum = div_ceil(&(&hi_sum * &hi_sum), &one);
    }
    Ok((lo_sum, hi_sum))
}

/// `g(E) = q^2 E - M^2 k^2 E^2 - M^2 m^2 q^2`; the vector is short iff `g(e^t) >= 0`.
fn short_rigorous(m: u64, k: i128, q: u64, m2: &BigRational, t: f64) -> Result<bool> {
    let q2 = BigRational::from(BigInt::from(q) * BigInt::from(q));
    let k2 = BigRational::from(BigInt::from(k) * BigInt::from(k));
    let mm = BigRational::from(BigInt::from(m) * BigInt::from(m));
    let g = |e: &BigRational| &q2 * e - m2 * &k2 * e * e - m2 * &mm * &q2;
    let mut prec = 128;
    while prec <= MAX_PRECISION {
        let (lo, hi) = exp_bounds(t, prec)?;
        let den = BigInt::one() << prec;
        let (elo, ehi) = (BigRational::new(lo, den.clone()), BigRational::new(hi, den));
        let (glo, ghi) = (g(&elo), g(&ehi));
        if !glo.is_negative() && !ghi.is_negative() {
            return Ok(true);
        }
        let vertex = if k2.is_zero() { None } else { Some(&q2 / (BigRational::from_integer(2.into()) * m2 * &k2)) };
        let gmax = match vertex {
            Some(v) if v >= elo && v <= ehi => g(&v),
            _ => glo.max(ghi),
        };
        if gmax.is_negative() {
            return Ok(false);
        }
        prec *= 2;
    }
    Err(Error::InvariantViolation(format!("undecidable comparison at m={m} k={k} q={q} t={t}")))
}

fn count(modulus: &Modulus, big_m: f64, t: f64) -> Result<(u64, u64)> {
    let q = modulus.q();
    let qf = q as f64;
    let (e, ei) = (t.exp(), (-t).exp());
    let target = 1.0 / (big_m * big_m);
    let m2 = exact_f64(big_m) * exact_f64(big_m);
    let m_max = ((t / 2.0).exp() / big_m).floor() as u64 + 1;
    let mut hits = 0u64;
    let mut escalations = 0u64;
    for p in modulus.coprime_residues() {
        let mut short = false;
        'search: for m in 1..=m_max {
            let mf = m as f64;
            if mf * mf * ei > target * (1.0 + MARGIN) {
                break;
            }
            let r = (m as u128 * p as u128 % q as u128) as i128;
            for k in [r, r - q as i128] {
                let kf = k as f64;
                let v = mf * mf * ei + kf * kf * e / (qf * qf);
                let rel = (v - target) / target;
                let is_short = if rel.abs() < MARGIN {
                    escalations += 1;
                    short_rigorous(m, k, q, &m2, t)?
                } else {
                    rel < 0.0
                };
                if is_short {
                    short = true;
                    break 'search;
                }
            }
        }
        hits += u64::from(short);
    }
    Ok((hits, escalations))
}

fn report(modulus: &Modulus, big_m: f64, t: f64, in_hypothesis: bool) -> Result<MassEscapeReport> {
    if !(big_m > 1.0 && big_m.is_finite()) {
        return Err(Error::OutOfRange(format!("M = {big_m} must exceed 1")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("t = {t} must be finite and nonnegative")));
    }
    let (hits, escalations) = count(modulus, big_m, t)?;
    let phi = modulus.euler_phi();
    // count <= 4 phi / M^2, compared exactly
    let lhs = BigRational::from_integer(hits.into()) * exact_f64(big_m) * exact_f64(big_m);
    let rhs = BigRational::from_integer((4 * phi).into());
    Ok(MassEscapeReport {
        q: modulus.q(),
        big_m,
        t,
        phi,
        count: hits,
        bound: 4.0 * phi as f64 / (big_m * big_m),
        within_bound: lhs <= rhs,
        in_hypothesis,
        escalations,
    })
}

/// Largest `t` allowed by the hypothesis, `ln q - 2 omega(q)`.
pub fn hypothesis_limit(modulus: &Modulus) -> f64 {
    (modulus.q() as f64).ln() - 2.0 * modulus.omega() as f64
}

/// Counts bad `p` at time `t`, requiring `0 <= t <= ln q - 2 omega(q)`.
pub fn mass_escape_count(modulus: &Modulus, big_m: f64, t: f64) -> Result<MassEscapeReport> {
    let max = hypothesis_limit(modulus);
    if !(0.0..=max).contains(&t) {
        return Err(Error::OutsideHypothesis { t, max });
    }
    report(modulus, big_m, t, true)
}

/// The same count for any `t >= 0`, flagging whether the hypothesis holds.
pub fn mass_escape_count_unchecked(modulus: &Modulus, big_m: f64, t: f64) -> Result<MassEscapeReport> {
    let max = hypothesis_limit(modulus);
    report(modulus, big_m, t, (0.0..=max).contains(&t))
}
