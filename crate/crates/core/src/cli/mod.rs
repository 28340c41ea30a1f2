//! Command-line driver: configuration, dispatch and persistence of result
//! records.
//!
//! Every subcommand produces a stream of [`ResultRecord`]s with a fixed
//! schema. Settings come from an optional `key=value` file (`--config`)
//! overlaid by command-line flags. Wall-clock time goes to stderr so that
//! identical configurations give identical output bytes.

mod record;
mod run;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};

pub use record::{emit, parse, round12, schema, Format, Kind, ResultRecord, Schema, Value, CODE_VERSION, SCHEMAS, SCHEMA_VERSION};
pub use run::{run, Outcome};

/// Thread count override consulted when `threads` is not configured.
pub const THREADS_ENV: &str = "CFELAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Cfe,
    SweepLen,
    SweepDigits,
    Dispersion,
    Orbit,
    CrossSection,
    ReturnTime,
    Kappa,
    MassEscape,
    FdHist,
    HaarSelftest,
    ZarembaCensus,
    ZarembaHeight,
    SymmetryCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Cfe => "cfe",
            Command::SweepLen => "sweep-len",
            Command::SweepDigits => "sweep-digits",
            Command::Dispersion => "dispersion",
            Command::Orbit => "orbit",
            Command::CrossSection => "cross-section",
            Command::ReturnTime => "return-time",
            Command::Kappa => "kappa",
            Command::MassEscape => "mass-escape",
            Command::FdHist => "fd-hist",
            Command::HaarSelftest => "haar-selftest",
            Command::ZarembaCensus => "zaremba-census",
            Command::ZarembaHeight => "zaremba-height",
            Command::SymmetryCheck => "symmetry-check",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cfelab", version, about = "Continued-fraction statistics and divergent lattice orbits")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// key=value settings file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub qmin: Option<String>,
    #[arg(long)]
    pub qmax: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    /// comma-separated height thresholds
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub bins: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub orbits: Option<String>,
    #[arg(long)]
    pub returns: Option<String>,
    #[arg(long)]
    pub nx: Option<String>,
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
    /// csv or json (one object per line)
    #[arg(long)]
    pub format: Option<String>,
    /// zaremba-census: also write per-q counts here
    #[arg(long = "census-out")]
    pub census_out: Option<String>,
}

const KEYS: &[&str] = &[
    "p", "q", "qmin", "qmax", "k", "m", "t", "dt", "delta", "bins", "seed", "samples", "orbits", "returns", "nx",
    "nu", "threads", "output", "format", "census_out",
];

/// Keys that do not change the records and stay out of the config echo.
const UNECHOED: &[&str] = &["threads", "output", "format", "census_out"];

pub const DEFAULT_SEED: u64 = 1;

/// Validated settings for one run. Typed accessors record every value they
/// hand out, defaults included; that record is the config echo.
#[derive(Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    values: BTreeMap<String, String>,
    used: Mutex<BTreeMap<String, String>>,
}

impl Clone for ExperimentConfig {
    fn clone(&self) -> Self {
        ExperimentConfig { command: self.command, values: self.values.clone(), used: Mutex::new(BTreeMap::new()) }
    }
}

fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key {k:?}", i + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig { command, values: BTreeMap::new(), used: Mutex::new(BTreeMap::new()) }
    }

    /// Sets `key`, as a flag would.
    pub fn set(mut self, key: &str, value: impl ToString) -> Result<Self> {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key, value.to_string());
        Ok(self)
    }

    pub fn from_args(args: &Args) -> Result<Self> {
        let mut values = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags = [
            ("p", &args.p),
            ("q", &args.q),
            ("qmin", &args.qmin),
            ("qmax", &args.qmax),
            ("k", &args.k),
            ("m", &args.m),
            ("t", &args.t),
            ("dt", &args.dt),
            ("delta", &args.delta),
            ("bins", &args.bins),
            ("seed", &args.seed),
            ("samples", &args.samples),
            ("orbits", &args.orbits),
            ("returns", &args.returns),
            ("nx", &args.nx),
            ("nu", &args.nu),
            ("threads", &args.threads),
            ("output", &args.output),
            ("format", &args.format),
            ("census_out", &args.census_out),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(ExperimentConfig { command: args.command, values, used: Mutex::new(BTreeMap::new()) })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn note(&self, key: &str, v: String) {
        if !UNECHOED.contains(&key) {
            self.used.lock().expect("config lock").insert(key.to_string(), v);
        }
    }

    fn parsed<T: std::str::FromStr + ToString>(&self, key: &str, default: Option<T>) -> Result<Option<T>> {
        let v = match self.raw(key) {
            Some(s) => Some(s.parse::<T>().map_err(|_| Error::Config(format!("{key} = {s:?} does not parse")))?),
            None => default,
        };
        if let Some(v) = &v {
            self.note(key, v.to_string());
        }
        Ok(v)
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::Config(format!("{} needs --{key}", self.command.name())))
    }

    /// Positive integer, or `default`.
    pub fn count(&self, key: &str, default: Option<u64>) -> Result<u64> {
        let v = self.require(key, self.parsed::<u64>(key, default)?)?;
        if v == 0 {
            return Err(Error::Config(format!("{key} must be positive")));
        }
        Ok(v)
    }

    /// Positive finite real, or `default`.
    pub fn real(&self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = self.require(key, self.parsed::<f64>(key, default)?)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{key} = {v} must be positive and finite")));
        }
        Ok(v)
    }

    pub fn optional_real(&self, key: &str) -> Result<Option<f64>> {
        match self.parsed::<f64>(key, None)? {
            Some(v) if !(v >= 0.0 && v.is_finite()) => Err(Error::Config(format!("{key} = {v} must be finite and >= 0"))),
            v => Ok(v),
        }
    }

    pub fn reals(&self, key: &str, default: &str) -> Result<Vec<f64>> {
        let s = self.raw(key).unwrap_or(default);
        let v = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| *v > 0.0 && v.is_finite())
                    .ok_or_else(|| Error::Config(format!("{key}: {t:?} is not a positive real")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.note(key, s.replace(' ', ""));
        Ok(v)
    }

    pub fn seed(&self) -> Result<u64> {
        Ok(self.parsed::<u64>("seed", Some(DEFAULT_SEED))?.expect("defaulted"))
    }

    pub fn format(&self) -> Result<Format> {
        self.raw("format").unwrap_or("csv").parse()
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.raw("output").map(PathBuf::from)
    }

    pub fn census_out(&self) -> Option<PathBuf> {
        self.raw("census_out").map(PathBuf::from)
    }

    pub fn threads(&self) -> Result<Option<usize>> {
        let s = self.raw("threads").map(str::to_string).or_else(|| std::env::var(THREADS_ENV).ok());
        match s {
            None => Ok(None),
            Some(s) => match s.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(Error::Config(format!("threads = {s:?} must be a positive integer"))),
            },
        }
    }

    /// The values consulted so far, sorted by key, seed always included.
    pub fn echo(&self) -> Vec<(String, String)> {
        let _ = self.seed();
        self.used.lock().expect("config lock").iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}

/// Exit status for an error: 1 configuration, 2 invariant, 3 I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => 3,
        Error::Config(_)
        | Error::Parse(_)
        | Error::Schema(_)
        | Error::OutOfRange(_)
        | Error::ZeroModulus
        | Error::NotCoprime { .. }
        | Error::NotReduced { .. }
        | Error::EmptyWord
        | Error::ZeroDigit
        | Error::NonCanonicalWord
        | Error::OutsideHypothesis { .. }
        | Error::InsufficientData(_)
        | Error::Incompatible(_)
        | Error::DegenerateStart { .. } => 1,
        _ => 2,
    }
}

fn kind(code: i32) -> &'static str {
    match code {
        1 => "config",
        3 => "io",
        _ => "invariant",
    }
}

/// `error code=<n> kind=<config|invariant|io> message="<text>"`.
pub fn error_line(e: &Error) -> String {
    let code = exit_code(e);
    format!("error code={code} kind={} message={:?}", kind(code), e.to_string())
}

fn write_records(cfg: &ExperimentConfig, records: &[ResultRecord], stdout: &mut dyn Write) -> Result<()> {
    let s = schema(cfg.command.name())?;
    let format = cfg.format()?;
    match cfg.output() {
        Some(path) => {
            let io = |e| Error::Io { path: path.clone(), source: e };
            let f = File::create(&path).map_err(io)?;
            let mut w = BufWriter::new(f);
            emit(&mut w, s, records, format).map_err(|e| with_path(e, &path))?;
            w.flush().map_err(io)
        }
        None => emit(stdout, s, records, format),
    }
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io { path: path.to_path_buf(), source },
        e => e,
    }
}

/// Runs one experiment and writes its records. Records produced before an
/// invariant breach are still written; the breach decides the exit code.
pub fn execute(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let result = (|| -> Result<()> {
        let cfg = ExperimentConfig::from_args(args)?;
        cfg.format()?;
        let outcome = match cfg.threads()? {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?
                .install(|| run(&cfg))?,
            None => run(&cfg)?,
        };
        write_records(&cfg, &outcome.records, stdout)?;
        match outcome.breach {
            Some(e) => Err(e),
            None => Ok(()),
        }
    })();
    let _ = writeln!(stderr, "elapsed_ms={}", start.elapsed().as_millis());
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_line(&e));
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            if code == 0 {
                let _ = e.print();
            } else {
                eprintln!("{}", e.render().to_string().trim_end());
                eprintln!("{}", error_line(&Error::Config(e.kind().to_string())));
            }
            return code;
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    execute(&args, &mut stdout.lock(), &mut stderr.lock())
}
