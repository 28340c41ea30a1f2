//! The exact time-reversal identity between the orbits of `p/q` and `p'/q`,
//! where `p p' = -1 (mod q)`.
//!
//! With `gamma = [[q, -p], [-p', q']]` and `-p p' + q q' = 1`,
//! `gamma [[1/q, p], [0, q]] = [[1, 0], [-p'/q, 1]]`. The left factor
//! `[[1/q, p], [0, q]]` is `u_{p/q} a(2 ln q)` and the right side is the dual
//! of `u_{p'/q}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::RationalMatrix;
use crate::arith::{dual_residue, Modulus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryWitness {
    pub p: u64,
    pub q: u64,
    pub p_dual: u64,
    pub q_dual: i128,
    pub gamma: [[i128; 2]; 2],
}

fn int(n: i128) -> BigRational {
    BigRational::from(BigInt::from(n))
}

fn mul(x: &RationalMatrix, y: &RationalMatrix) -> RationalMatrix {
    let e = |i: usize, j: usize| &x[i][0] * &y[0][j] + &x[i][1] * &y[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn residual(lhs: &RationalMatrix, rhs: &RationalMatrix) -> String {
    let d: Vec<String> = (0..4).map(|k| (&lhs[k / 2][k % 2] - &rhs[k / 2][k % 2]).to_string()).collect();
    format!("residual [[{}, {}], [{}, {}]]", d[0], d[1], d[2], d[3])
}

pub fn verify_symmetry(p: u64, q: u64) -> Result<SymmetryWitness> {
    let m = Modulus::new(q)?;
    let p_dual = dual_residue(p, &m)?;
    let (pi, qi, pd) = (p as i128, q as i128, p_dual as i128);
    let num = 1 + pi * pd;
    if num % qi != 0 {
        return Err(Error::InvariantViolation(format!("q does not divide 1 + p p' for p={p} q={q}")));
    }
    let q_dual = num / qi;
    let gamma = [[qi, -pi], [-pd, q_dual]];
    if gamma[0][0] * gamma[1][1] - gamma[0][1] * gamma[1][0] != 1 {
        return Err(Error::InvariantViolation(format!("det gamma != 1 for p={p} q={q}")));
    }
    let gq = gamma.map(|r| r.map(int));
    let qr = int(qi);
    let zero = BigRational::zero;
    // u_{p/q} a(2 ln q) = [[1, p/q], [0, 1]] diag(1/q, q)
    let u = [[BigRational::one(), BigRational::new(pi.into(), qi.into())], [zero(), BigRational::one()]];
    let a = [[qr.recip(), zero()], [zero(), qr.clone()]];
    let ua = mul(&u, &a);
    let expected_ua = [[qr.recip(), int(pi)], [zero(), qr.clone()]];
    if ua != expected_ua {
        return Err(Error::InvariantViolation(residual(&ua, &expected_ua)));
    }
    // dual of u_{p'/q}: inverse transpose of [[1, p'/q], [0, 1]]
    let rhs = [[BigRational::one(), zero()], [-BigRational::new(pd.into(), qi.into()), BigRational::one()]];
    let lhs = mul(&gq, &ua);
    if lhs != rhs {
        return Err(Error::InvariantViolation(residual(&lhs, &rhs)));
    }
    Ok(SymmetryWitness { p, q, p_dual, q_dual, gamma })
}
