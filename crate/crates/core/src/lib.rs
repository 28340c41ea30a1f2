//! Exact continued-fraction statistics and divergent orbits on the space of
//! planar lattices.

pub mod arith;
pub mod cfe;
pub mod cli;
pub mod crosssec;
pub mod error;
pub mod gaussmeasure;
pub mod lattice;
pub mod par;
pub mod quad;
pub mod stats;
pub mod zaremba;

pub use error::{Error, Result};
