//! Elementary number theory on moduli `q`: factorization, totient, distinct
//! prime count, coprime residues and the dual residue `p'` with
//! `p p' = -1 (mod q)`.
//!
//! The degenerate modulus `q = 1` follows the empty-product conventions:
//! `phi(1) = 1`, `omega(1) = 0`, and its single coprime residue is `1`.

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};

/// A positive modulus together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Modulus {
    q: u64,
    factors: Vec<(u64, u32)>,
}

impl Modulus {
    /// Factorizes `q` by trial division.
    pub fn new(q: u64) -> Result<Self> {
        factorize(q)
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// `(prime, exponent)` pairs with strictly increasing primes.
    pub fn prime_factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn euler_phi(&self) -> u64 {
        euler_phi(self)
    }

    pub fn omega(&self) -> u32 {
        omega(self)
    }

    pub fn coprime_residues(&self) -> CoprimeResidues<'_> {
        coprime_residues(self)
    }

    /// True when `gcd(n, q) = 1`, tested against the prime factors only.
    pub fn is_coprime(&self, n: u64) -> bool {
        self.factors.iter().all(|&(p, _)| n % p != 0)
    }

    /// Squarefree divisors of `q` with their Moebius sign.
    fn signed_squarefree_divisors(&self) -> Vec<(u64, bool)> {
        let mut divisors = vec![(1u64, true)];
        for &(p, _) in &self.factors {
            let extra: Vec<_> = divisors.iter().map(|&(d, even)| (d * p, !even)).collect();
            divisors.extend(extra);
        }
        divisors
    }
}

pub fn factorize(q: u64) -> Result<Modulus> {
    if q == 0 {
        return Err(Error::ZeroModulus);
    }
    let mut n = q;
    let mut factors = Vec::new();
    let mut push = |n: &mut u64, p: u64| {
        let mut e = 0;
        while *n % p == 0 {
            *n /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(&mut n, 2);
    push(&mut n, 3);
    // 6k +- 1 wheel
    let mut p = 5u64;
    while p.saturating_mul(p) <= n {
        push(&mut n, p);
        push(&mut n, p + 2);
        p += 6;
    }
    if n > 1 {
        factors.push((n, 1));
    }
    Ok(Modulus { q, factors })
}

pub fn euler_phi(m: &Modulus) -> u64 {
    m.factors
        .iter()
        .fold(m.q, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn omega(m: &Modulus) -> u32 {
    m.factors.len() as u32
}

/// Iterator over `{1 <= p <= q : gcd(p, q) = 1}` in increasing order.
///
/// For `q >= 2` this never yields `q` itself; for `q = 1` it yields `1`.
#[derive(Debug, Clone)]
pub struct CoprimeResidues<'a> {
    modulus: &'a Modulus,
    next: u64,
}

impl Iterator for CoprimeResidues<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        while self.next <= self.modulus.q {
            let n = self.next;
            self.next += 1;
            if self.modulus.is_coprime(n) {
                return Some(n);
            }
        }
        None
    }
}

pub fn coprime_residues(m: &Modulus) -> CoprimeResidues<'_> {
    CoprimeResidues { modulus: m, next: 1 }
}

/// Number of residues `1 <= l <= alpha q` coprime to `q`, by inclusion-exclusion
/// over the squarefree divisors of `q`.
pub fn count_coprime_upto(m: &Modulus, alpha: Ratio<u64>) -> Result<u64> {
    if *alpha.numer() > *alpha.denom() {
        return Err(Error::OutOfRange(format!("alpha = {alpha} exceeds 1")));
    }
    let limit = (*alpha.numer() as u128 * m.q as u128 / *alpha.denom() as u128) as u64;
    let mut count: i128 = 0;
    for (d, even) in m.signed_squarefree_divisors() {
        let term = (limit / d) as i128;
        if even {
            count += term;
        } else {
            count -= term;
        }
    }
    Ok(count as u64)
}

/// Inverse of `a` modulo `q`, if it exists.
pub fn mod_inverse(a: u64, q: u64) -> Option<u64> {
    if q == 0 {
        return None;
    }
    let g = (a as i128).extended_gcd(&(q as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(q as i128) as u64)
}

/// The residue `p'` in `(Z/qZ)^x` with `p p' = -1 (mod q)`.
pub fn dual_residue(p: u64, m: &Modulus) -> Result<u64> {
    let q = m.q;
    if q < 2 {
        return Err(Error::OutOfRange("dual residue needs q >= 2".into()));
    }
    let inv = mod_inverse(p % q, q).ok_or(Error::NotCoprime { p, q })?;
    Ok(if inv == 0 { 0 } else { q - inv })
}

/// Smallest-prime-factor table for fast factorization of every `n <= limit`.
#[derive(Debug, Clone)]
pub struct Sieve {
    spf: Vec<u32>,
}

impl Sieve {
    pub fn new(limit: u32) -> Self {
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Sieve { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn modulus(&self, q: u64) -> Result<Modulus> {
        if q == 0 {
            return Err(Error::ZeroModulus);
        }
        if q > self.limit() {
            return factorize(q);
        }
        let mut n = q as usize;
        let mut factors: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            factors.push((p as u64, e));
        }
        Ok(Modulus { q, factors })
    }
}
