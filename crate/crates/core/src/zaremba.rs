//! Fractions with bounded partial quotients, `Lambda_{q,K}`.
//!
//! Membership is decided on the canonical expansion `[a_1, ..., a_n]`:
//! the relaxed rule asks `a_i <= K` for `i < n` and `a_n <= K + 1`, which
//! accepts exactly the fractions having some expansion with all digits at
//! most `K` (since `[..., a_n] = [..., a_n - 1, 1]`). The strict rule asks
//! `a_i <= K` for all `i`.

use rayon::prelude::*;

use crate::arith::{dual_residue, Modulus};
use crate::cfe::{cfe_digits, ReducedFraction};
use crate::error::{Error, Result};
use crate::lattice::OrbitTracker;
use crate::stats::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Relaxed,
    Strict,
}

pub fn is_member(x: ReducedFraction, k: u64, rule: Rule) -> bool {
    let w = cfe_digits(x);
    let d = w.digits();
    let (last, head) = d.split_last().expect("nonempty expansion");
    let cap = match rule {
        Rule::Relaxed => k + 1,
        Rule::Strict => k,
    };
    head.iter().all(|&a| a <= k) && *last <= cap
}

/// Members of `Lambda_{q,K}` by direct expansion.
pub fn members(q: u64, k: u64, rule: Rule) -> Result<Vec<u64>> {
    let m = Modulus::new(q)?;
    Ok(m.coprime_residues()
        .filter(|&p| p < q || q == 1)
        .filter(|&p| ReducedFraction::new(p, q).map(|x| is_member(x, k, rule)).unwrap_or(false))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZarembaCensus {
    k: u64,
    max_q: u64,
    relaxed: Vec<u32>,
    strict: Vec<u32>,
}

impl ZarembaCensus {
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn max_q(&self) -> u64 {
        self.max_q
    }

    pub fn count(&self, q: u64, rule: Rule) -> u32 {
        if q > self.max_q {
            return 0;
        }
        match rule {
            Rule::Relaxed => self.relaxed[q as usize],
            Rule::Strict => self.strict[q as usize],
        }
    }

    /// `sum_{q <= bound} |Lambda_{q,K}|`.
    pub fn total(&self, bound: u64, rule: Rule) -> u64 {
        (2..=bound.min(self.max_q)).map(|q| self.count(q, rule) as u64).sum()
    }

    /// Rows `(q, relaxed, strict)` for `2 <= q <= Q`.
    pub fn rows(&self) -> impl Iterator<Item = (u64, u32, u32)> + '_ {
        (2..=self.max_q).map(|q| (q, self.relaxed[q as usize], self.strict[q as usize]))
    }
}

struct Walker<'a> {
    k: u64,
    max_q: u64,
    relaxed: &'a mut [u32],
    strict: &'a mut [u32],
}

impl Walker<'_> {
    /// `(qa, qb) = (q_{j-1}, q_j)` for a prefix whose digits are all at most `K`.
    fn walk(&mut self, qa: u64, qb: u64) {
        // canonical final digit is at least 2
        for a in 2..=self.k + 1 {
            let q = a * qb + qa;
            if q > self.max_q {
                break;
            }
            self.relaxed[q as usize] += 1;
            if a <= self.k {
                self.strict[q as usize] += 1;
            }
        }
        for a in 1..=self.k {
            let q = a * qb + qa;
            // any completion at least doubles q
            if q + qb > self.max_q {
                break;
            }
            self.walk(qb, q);
        }
    }
}

/// Counts `|Lambda_{q,K}|` for all `q <= max_q` by depth-first search over
/// digit words, using `q_{j+1} = a_{j+1} q_j + q_{j-1}`. First-digit branches
/// run in parallel and are summed in branch order.
pub fn enumerate_bounded(max_q: u64, k: u64) -> Result<ZarembaCensus> {
    if k < 1 || max_q < 2 {
        return Err(Error::OutOfRange(format!("need K >= 1 and Q >= 2, got K={k} Q={max_q}")));
    }
    if max_q > u32::MAX as u64 {
        return Err(Error::OutOfRange("census cap exceeds u32 range".into()));
    }
    let n = max_q as usize + 1;
    let mut relaxed = vec![0u32; n];
    let mut strict = vec![0u32; n];
    // single-digit words 1/a, a >= 2
    for a in 2..=(k + 1).min(max_q) {
        relaxed[a as usize] += 1;
        if a <= k {
            strict[a as usize] += 1;
        }
    }
    let branches: Vec<(Vec<u32>, Vec<u32>)> = (1..=k)
        .into_par_iter()
        .map(|a1| {
            let mut r = vec![0u32; n];
            let mut s = vec![0u32; n];
            // after the first digit: (q_0, q_1) = (1, a1)
            if a1 + 1 <= max_q {
                Walker { k, max_q, relaxed: &mut r, strict: &mut s }.walk(1, a1);
            }
            (r, s)
        })
        .collect();
    for (r, s) in branches {
        for i in 0..n {
            relaxed[i] += r[i];
            strict[i] += s[i];
        }
    }
    Ok(ZarembaCensus { k, max_q, relaxed, strict })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub windows: usize,
}

/// Least-squares slope of `ln(mean count)` against `ln q` over the dyadic
/// windows `[2^j, 2^{j+1})`, `2^j >= 64`, that lie inside the census.
/// Windows with zero mean are skipped.
pub fn exponent_fit(c: &ZarembaCensus, rule: Rule) -> Result<ExponentFit> {
    let mut pts = Vec::new();
    let mut lo = 64u64;
    while 2 * lo - 1 <= c.max_q() {
        let hi = 2 * lo;
        let sum: u64 = (lo..hi).map(|q| c.count(q, rule) as u64).sum();
        let mean = sum as f64 / (hi - lo) as f64;
        if mean > 0.0 {
            pts.push((((lo + hi - 1) as f64 / 2.0).ln(), mean.ln()));
        }
        lo = hi;
    }
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!("{} dyadic windows, need 4", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(ExponentFit { exponent: slope, intercept: my - slope * mx, windows: pts.len() })
}

/// `sqrt(2 (K+1)^3)`.
pub fn height_bound(k: u64) -> f64 {
    (2.0 * ((k + 1) as f64).powi(3)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightBoundReport {
    pub q: u64,
    pub k: u64,
    pub members: usize,
    pub bound: f64,
    pub max_height: f64,
    pub argmax_p: u64,
    pub argmax_t: f64,
    pub min_height: f64,
    /// `(p, t, height)` samples above the bound.
    pub violations: Vec<(u64, f64, f64)>,
}

/// Samples the orbits of all members of `Lambda_{q,K}` (relaxed rule) on a
/// grid over `[0, 2 ln q]` and compares their heights with `sqrt(2 (K+1)^3)`.
pub fn height_bound_check(q: u64, k: u64, dt: f64) -> Result<HeightBoundReport> {
    if q > 1_000_000 {
        return Err(Error::OutOfRange(format!("q = {q} exceeds 1e6")));
    }
    let grid = TimeGrid::new(q, dt)?;
    let bound = height_bound(k);
    let ps = members(q, k, Rule::Relaxed)?;
    let mut rep = HeightBoundReport {
        q,
        k,
        members: ps.len(),
        bound,
        max_height: 0.0,
        argmax_p: 0,
        argmax_t: 0.0,
        min_height: f64::INFINITY,
        violations: Vec::new(),
    };
    for &p in &ps {
        let mut tracker = OrbitTracker::new(ReducedFraction::new(p, q)?);
        for i in 0..=grid.steps {
            let t = grid.time(i);
            let h = tracker.sample(t)?.height;
            if h > rep.max_height {
                (rep.max_height, rep.argmax_p, rep.argmax_t) = (h, p, t);
            }
            rep.min_height = rep.min_height.min(h);
            if h > bound {
                rep.violations.push((p, t, h));
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualClosure {
    pub members: u64,
    /// Members whose dual residue is also a member.
    pub closed: u64,
}

/// How often `p -> p'` (`p p' = -1 mod q`) maps `Lambda_{q,K}` into itself,
/// summed over `3 <= q <= max_q`.
pub fn dual_closure(max_q: u64, k: u64, rule: Rule) -> Result<DualClosure> {
    let mut out = DualClosure { members: 0, closed: 0 };
    for q in 3..=max_q {
        let m = Modulus::new(q)?;
        let ps = members(q, k, rule)?;
        for &p in &ps {
            out.members += 1;
            let d = dual_residue(p, &m)?;
            if ps.binary_search(&d).is_ok() {
                out.closed += 1;
            }
        }
    }
    Ok(out)
}
