use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus must be at least 1")]
    ZeroModulus,

    #[error("{p} is not coprime to {q}")]
    NotCoprime { p: u64, q: u64 },

    #[error("{p}/{q} is not a reduced fraction")]
    NotReduced { p: u64, q: u64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("empty continued fraction word")]
    EmptyWord,

    #[error("partial quotients must be positive")]
    ZeroDigit,

    #[error("word ends in digit 1; not the canonical expansion")]
    NonCanonicalWord,

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("basis is not unimodular (det = {det})")]
    SingularBasis { det: f64 },

    #[error("reduction did not converge within {0} steps")]
    IterationCap(usize),

    #[error("{p}/{q} is a degenerate start for the cross-section (of the form 1/n or 1-1/n)")]
    DegenerateStart { p: u64, q: u64 },

    #[error("orbit has left the cross-section for good")]
    Terminated,

    #[error("cross-section invariant violated: {0}")]
    DomainViolation(String),

    #[error("t = {t} outside the admissible window [0, {max}]")]
    OutsideHypothesis { t: f64, max: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("incompatible measures: {0}")]
    Incompatible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("record schema mismatch: {0}")]
    Schema(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
