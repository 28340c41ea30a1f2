//! Empirical measures and the equidistribution and no-escape-of-mass experiments.

mod escape;
mod height;
mod measure;
mod sweep;

pub use escape::{exp_bounds, hypothesis_limit, mass_escape_count, mass_escape_count_unchecked, MassEscapeReport};
pub use height::{
    chi_square_discrepancy, exact_mean_tail_prime, haar_height_tail, haar_reference, haar_reference_mc,
    orbit_height_tail, orbit_sweep, FdHistogram, OrbitSweep, OrbitSweepConfig, TimeGrid, U_MAX,
};
pub use measure::{ks_distance, nu_pq, Binning, EmpiricalMeasure, DEFAULT_BINS};
pub use sweep::{
    dispersion, dispersion_from, heilbronn_ratio, len_stats, nu_bar, summarize, sweep, SweepAccumulator,
    SweepSummary, DIGIT_CAP,
};
