use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::record::ResultRecord;
use super::{Command, ExperimentConfig};
use crate::arith::{dual_residue, Modulus};
use crate::cfe::{cfe_digits, cfe_len, ReducedFraction};
use crate::crosssec::{
    crossing_sequence, detect_crossings_numeric, exit_time, haar_mean_return_time, kappa_quadrature,
    mean_return_time_mc,
};
use crate::error::{Error, Result};
use crate::gaussmeasure::digit_probability;
use crate::lattice::{sample_fd_point, to_fundamental_domain, haar_sample, verify_symmetry, OrbitTracker};
use crate::stats::{
    chi_square_discrepancy, dispersion, haar_height_tail, haar_reference, heilbronn_ratio, hypothesis_limit,
    len_stats, mass_escape_count, orbit_sweep, summarize, sweep, FdHistogram, OrbitSweepConfig, TimeGrid,
};
use crate::zaremba::{enumerate_bounded, exponent_fit, height_bound, height_bound_check, Rule};

/// Records of one run, plus the invariant breach that ends it, if any.
#[derive(Debug)]
pub struct Outcome {
    pub records: Vec<ResultRecord>,
    pub breach: Option<Error>,
}

impl From<Vec<ResultRecord>> for Outcome {
    fn from(records: Vec<ResultRecord>) -> Self {
        Outcome { records, breach: None }
    }
}

fn fraction(cfg: &ExperimentConfig) -> Result<ReducedFraction> {
    ReducedFraction::new(cfg.count("p", None)?, cfg.count("q", None)?)
}

fn modulus(cfg: &ExperimentConfig, min: u64) -> Result<Modulus> {
    let q = cfg.count("q", None)?;
    if q < min {
        return Err(Error::Config(format!("q = {q} must be at least {min}")));
    }
    Modulus::new(q)
}

fn q_range(cfg: &ExperimentConfig) -> Result<(u64, u64)> {
    let qmax = cfg.count("qmax", None)?;
    let qmin = cfg.count("qmin", Some(2))?;
    if qmin < 2 || qmin > qmax {
        return Err(Error::Config(format!("need 2 <= qmin <= qmax, got {qmin}..{qmax}")));
    }
    Ok((qmin, qmax))
}

/// Dispatches `cfg` to its experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = cfg.seed()?;
    let rec = |name: &str| ResultRecord::new(name, seed, Vec::new());
    let name = cfg.command.name();
    let mut out: Outcome = match cfg.command {
        Command::Cfe => {
            let x = fraction(cfg)?;
            let digits: Vec<String> = cfe_digits(x).digits().iter().map(u64::to_string).collect();
            let dual = dual_residue(x.numer(), &Modulus::new(x.denom())?)?;
            vec![rec(name)
                .with("p", x.numer())
                .with("q", x.denom())
                .with("digits", digits.join(" "))
                .with("len", cfe_len(x))
                .with("dual", dual)]
            .into()
        }
        Command::SweepLen => {
            let m = modulus(cfg, 2)?;
            let s = len_stats(&m)?;
            vec![rec(name)
                .with("q", s.q)
                .with("phi", s.phi)
                .with("mean_len", s.mean_len)
                .with("var_len", s.var_len)
                .with("heilbronn_ratio", s.heilbronn_ratio)
                .with("limit_ratio", heilbronn_ratio())
                .with("var_over_ln_q", s.var_len / (s.q as f64).ln())
                .with("skipped", s.skipped_count)]
            .into()
        }
        Command::SweepDigits => {
            let m = modulus(cfg, 2)?;
            let bins = cfg.count("bins", Some(crate::stats::DEFAULT_BINS as u64))? as usize;
            let acc = sweep(&m, bins)?;
            let s = summarize(&m, &acc)?;
            vec![rec(name)
                .with("q", s.q)
                .with("phi", s.phi)
                .with("bins", bins)
                .with("digit_one_frequency", s.digit_one_frequency)
                .with("digit_one_pooled", s.digit_one_pooled)
                .with("digit_one_gauss", digit_probability(1))
                .with("ks_to_gauss", s.ks_to_gauss)
                .with_histogram(acc.nu_bar()?.probabilities())]
            .into()
        }
        Command::Dispersion => {
            let m = modulus(cfg, 2)?;
            let delta = cfg.real("delta", Some(0.05))?;
            vec![rec(name).with("q", m.q()).with("delta", delta).with("dispersion", dispersion(&m, delta)?)].into()
        }
        Command::Orbit => orbit(cfg, seed)?.into(),
        Command::CrossSection => {
            let x = fraction(cfg)?;
            let dt = cfg.real("dt", Some(1e-3))?;
            let seq = crossing_sequence(x)?;
            let scan = detect_crossings_numeric(x, dt)?;
            vec![rec(name)
                .with("p", x.numer())
                .with("q", x.denom())
                .with("len", cfe_len(x))
                .with("crossings", seq.len())
                .with("exit_time", exit_time(&seq))
                .with("two_ln_q", 2.0 * (x.denom() as f64).ln())
                .with("numeric_crossings", scan.crossings.len())
                .with("boundary_events", scan.boundary_events.len())]
            .into()
        }
        Command::ReturnTime => {
            let orbits = cfg.count("orbits", Some(10_000))?;
            let returns = cfg.count("returns", Some(20))?;
            let returns = u32::try_from(returns).map_err(|_| Error::Config("returns too large".into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = mean_return_time_mc(&mut rng, orbits, returns);
            let haar = haar_mean_return_time(3.0 / (PI * PI));
            vec![rec(name)
                .with("orbits", orbits)
                .with("returns", returns as u64)
                .with("crossings", s.crossings)
                .with("mean", s.mean)
                .with("min", s.min)
                .with("haar_mean", haar)
                .with("relative_error", (s.mean - haar).abs() / haar)]
            .into()
        }
        Command::Kappa => {
            let k = kappa_quadrature();
            let exact = 3.0 / (PI * PI);
            vec![rec(name)
                .with("kappa", k)
                .with("three_over_pi2", exact)
                .with("abs_error", (k - exact).abs())
                .with("two_ln2_kappa", 2.0 * std::f64::consts::LN_2 * k)
                .with("haar_mean_return_time", haar_mean_return_time(k))]
            .into()
        }
        Command::MassEscape => {
            let m = modulus(cfg, 2)?;
            let ms = cfg.reals("m", "2,3,5")?;
            let limit = hypothesis_limit(&m);
            let t = match cfg.optional_real("t")? {
                Some(t) => t,
                None if limit >= 0.0 => {
                    cfg.note("t", limit.to_string());
                    limit
                }
                None => {
                    return Err(Error::Config(format!("q = {} leaves no admissible t (ln q - 2 omega(q) < 0)", m.q())))
                }
            };
            let mut records = Vec::new();
            let mut breach = None;
            for &big_m in &ms {
                let r = mass_escape_count(&m, big_m, t)?;
                if !r.within_bound && breach.is_none() {
                    breach = Some(Error::InvariantViolation(format!(
                        "mass escape bound: q={} M={} t={} count={} > {}",
                        r.q, r.big_m, r.t, r.count, r.bound
                    )));
                }
                records.push(
                    rec(name)
                        .with("q", r.q)
                        .with("big_m", r.big_m)
                        .with("t", r.t)
                        .with("phi", r.phi)
                        .with("count", r.count)
                        .with("bound", r.bound)
                        .with("within_bound", r.within_bound)
                        .with("in_hypothesis", r.in_hypothesis)
                        .with("escalations", r.escalations),
                );
            }
            Outcome { records, breach }
        }
        Command::FdHist => {
            let m = modulus(cfg, 3)?;
            let big_m = cfg.real("m", Some(2.0))?;
            let c = OrbitSweepConfig {
                dt: cfg.real("dt", Some(0.05))?,
                thresholds: vec![big_m],
                nx: cfg.count("nx", Some(16))? as usize,
                nu: cfg.count("nu", Some(16))? as usize,
                ..OrbitSweepConfig::default()
            };
            let s = orbit_sweep(&m, &c)?;
            vec![rec(name)
                .with("q", s.q)
                .with("orbits", s.orbits)
                .with("dt", c.dt)
                .with("big_m", big_m)
                .with("tail", s.tails()[0])
                .with("haar_tail", haar_height_tail(big_m))
                .with("nx", c.nx)
                .with("nu", c.nu)
                .with("discrepancy", s.discrepancy()?)
                .with_histogram(s.fd.frequencies())]
            .into()
        }
        Command::HaarSelftest => {
            let n = cfg.count("samples", Some(100_000))? as usize;
            let big_m = cfg.real("m", Some(2.0))?;
            let nx = cfg.count("nx", Some(16))? as usize;
            let nu = cfg.count("nu", Some(16))? as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut a, mut b) = (FdHistogram::new(nx, nu)?, FdHistogram::new(nx, nu)?);
            let mut tail = 0u64;
            for i in 0..2 * n {
                let fd = to_fundamental_domain(&haar_sample(&mut rng).basis)?;
                if fd.height() >= big_m {
                    tail += 1;
                }
                if i < n { &mut a } else { &mut b }.add(fd.x, fd.y, 1);
            }
            let proposals: u64 = (0..n).map(|_| sample_fd_point(&mut rng).proposals as u64).sum();
            let fa = a.frequencies();
            vec![rec(name)
                .with("samples", n)
                .with("big_m", big_m)
                .with("tail_mc", tail as f64 / (2 * n) as f64)
                .with("tail_exact", if big_m >= 1.0 { haar_height_tail(big_m) } else { 1.0 })
                .with("chi_square_mc_vs_mc", chi_square_discrepancy(&fa, &b.frequencies())?)
                .with("chi_square_mc_vs_quadrature", chi_square_discrepancy(&fa, &haar_reference(nx, nu))?)
                .with("acceptance_rate", n as f64 / proposals as f64)]
            .into()
        }
        Command::ZarembaCensus => {
            let qmax = cfg.count("qmax", None)?;
            let k = cfg.count("k", None)?;
            let c = enumerate_bounded(qmax, k)?;
            if let Some(path) = cfg.census_out() {
                let io = |e| Error::Io { path: path.clone(), source: e };
                let mut w = BufWriter::new(File::create(&path).map_err(io)?);
                writeln!(w, "q,count_relaxed,count_strict").map_err(io)?;
                for (q, r, s) in c.rows() {
                    writeln!(w, "{q},{r},{s}").map_err(io)?;
                }
                w.flush().map_err(io)?;
            }
            let fit = |rule| match exponent_fit(&c, rule) {
                Ok(f) => Ok(Some(f)),
                Err(Error::InsufficientData(_)) => Ok(None),
                Err(e) => Err(e),
            };
            let (relaxed, strict) = (fit(Rule::Relaxed)?, fit(Rule::Strict)?);
            vec![rec(name)
                .with("k", k)
                .with("qmax", qmax)
                .with("total_relaxed", c.total(qmax, Rule::Relaxed))
                .with("total_strict", c.total(qmax, Rule::Strict))
                .with("exponent_relaxed", relaxed.map(|f| f.exponent))
                .with("exponent_strict", strict.map(|f| f.exponent))
                .with("windows", relaxed.map_or(0, |f| f.windows))]
            .into()
        }
        Command::ZarembaHeight => {
            let k = cfg.count("k", None)?;
            let (qmin, qmax) = q_range(cfg)?;
            let dt = cfg.real("dt", Some(0.05))?;
            let reports = (qmin..=qmax)
                .into_par_iter()
                .map(|q| height_bound_check(q, k, dt))
                .collect::<Result<Vec<_>>>()?;
            let members: usize = reports.iter().map(|r| r.members).sum();
            let best = reports.iter().filter(|r| r.members > 0).max_by(|a, b| a.max_height.total_cmp(&b.max_height));
            let violations: usize = reports.iter().map(|r| r.violations.len()).sum();
            let breach = reports.iter().find_map(|r| {
                r.violations.first().map(|&(p, t, h)| {
                    Error::InvariantViolation(format!(
                        "height bound {} exceeded: K={k} p={p} q={} t={t} ht={h}",
                        r.bound, r.q
                    ))
                })
            });
            let record = rec(name)
                .with("k", k)
                .with("qmin", qmin)
                .with("qmax", qmax)
                .with("dt", dt)
                .with("members", members)
                .with("bound", height_bound(k))
                .with("max_height", best.map(|r| r.max_height))
                .with("argmax_p", best.map(|r| r.argmax_p))
                .with("argmax_q", best.map(|r| r.q))
                .with("argmax_t", best.map(|r| r.argmax_t))
                .with("violations", violations);
            Outcome { records: vec![record], breach }
        }
        Command::SymmetryCheck => {
            let (qmin, qmax) = q_range(cfg)?;
            let (pairs, failures, first) = (qmin..=qmax)
                .into_par_iter()
                .map(|q| -> Result<(u64, u64, Option<String>)> {
                    let m = Modulus::new(q)?;
                    let (mut n, mut bad, mut first) = (0, 0, None);
                    for p in m.coprime_residues() {
                        n += 1;
                        if let Err(e) = verify_symmetry(p, q) {
                            bad += 1;
                            first.get_or_insert(format!("p={p} q={q}: {e}"));
                        }
                    }
                    Ok((n, bad, first))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold((0u64, 0u64, None::<String>), |(n, b, f), (n2, b2, f2)| (n + n2, b + b2, f.or(f2)));
            let record = rec(name).with("qmin", qmin).with("qmax", qmax).with("pairs", pairs).with("failures", failures);
            Outcome { records: vec![record], breach: first.map(Error::InvariantViolation) }
        }
    };
    let echo = cfg.echo();
    for r in &mut out.records {
        r.config = echo.clone();
    }
    Ok(out)
}

fn orbit(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<ResultRecord>> {
    let x = fraction(cfg)?;
    let dt = cfg.real("dt", Some(0.05))?;
    let ms = cfg.reals("m", "2")?;
    let grid = TimeGrid::new(x.denom(), dt)?;
    let mut tracker = OrbitTracker::new(x);
    let mut samples = Vec::with_capacity(grid.steps + 1);
    for i in 0..=grid.steps {
        samples.push(tracker.sample(grid.time(i))?);
    }
    let (imax, max) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.height.total_cmp(&b.1.height))
        .map(|(i, s)| (i, s.height))
        .expect("grid has a point");
    let min = samples.iter().map(|s| s.height).fold(f64::INFINITY, f64::min);
    Ok(ms
        .iter()
        .map(|&m| {
            let hit: u64 = samples.iter().enumerate().filter(|(_, s)| s.height >= m).map(|(i, _)| grid.weight(i)).sum();
            ResultRecord::new("orbit", seed, Vec::new())
                .with("p", x.numer())
                .with("q", x.denom())
                .with("dt", dt)
                .with("samples", samples.len())
                .with("big_m", m)
                .with("tail", hit as f64 / grid.total_weight() as f64)
                .with("max_height", max)
                .with("argmax_t", grid.time(imax))
                .with("min_height", min)
        })
        .collect())
}
