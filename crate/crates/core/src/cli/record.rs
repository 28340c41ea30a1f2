//! Result records and their CSV / JSON-lines encodings.

use std::io::{Read, Write};

use serde_json::{Map, Number, Value as Json};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Bool,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    /// Not available for this run, e.g. a fit with too few windows.
    Missing,
}

impl Value {
    fn fits(&self, kind: Kind) -> bool {
        matches!(
            (self, kind),
            (Value::Int(_), Kind::Int)
                | (Value::Float(_), Kind::Float)
                | (Value::Bool(_), Kind::Bool)
                | (Value::Text(_), Kind::Text)
                | (Value::Missing, _)
        )
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Missing, Into::into)
    }
}

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn fmt_float(v: f64) -> String {
    format!("{:?}", round12(v))
}

#[derive(Debug)]
pub struct Schema {
    pub experiment: &'static str,
    pub metrics: &'static [(&'static str, Kind)],
    pub histogram: bool,
}

use Kind::*;

pub static SCHEMAS: &[Schema] = &[
    Schema {
        experiment: "cfe",
        metrics: &[("p", Int), ("q", Int), ("digits", Text), ("len", Int), ("dual", Int)],
        histogram: false,
    },
    Schema {
        experiment: "sweep-len",
        metrics: &[
            ("q", Int),
            ("phi", Int),
            ("mean_len", Float),
            ("var_len", Float),
            ("heilbronn_ratio", Float),
            ("limit_ratio", Float),
            ("var_over_ln_q", Float),
            ("skipped", Int),
        ],
        histogram: false,
    },
    Schema {
        experiment: "sweep-digits",
        metrics: &[
            ("q", Int),
            ("phi", Int),
            ("bins", Int),
            ("digit_one_frequency", Float),
            ("digit_one_pooled", Float),
            ("digit_one_gauss", Float),
            ("ks_to_gauss", Float),
        ],
        histogram: true,
    },
    Schema {
        experiment: "dispersion",
        metrics: &[("q", Int), ("delta", Float), ("dispersion", Float)],
        histogram: false,
    },
    Schema {
        experiment: "orbit",
        metrics: &[
            ("p", Int),
            ("q", Int),
            ("dt", Float),
            ("samples", Int),
            ("big_m", Float),
            ("tail", Float),
            ("max_height", Float),
            ("argmax_t", Float),
            ("min_height", Float),
        ],
        histogram: false,
    },
    Schema {
        experiment: "cross-section",
        metrics: &[
            ("p", Int),
            ("q", Int),
            ("len", Int),
            ("crossings", Int),
            ("exit_time", Float),
            ("two_ln_q", Float),
            ("numeric_crossings", Int),
            ("boundary_events", Int),
        ],
        histogram: false,
    },
    Schema {
        experiment: "return-time",
        metrics: &[
            ("orbits", Int),
            ("returns", Int),
            ("crossings", Int),
            ("mean", Float),
            ("min", Float),
            ("haar_mean", Float),
            ("relative_error", Float),
        ],
        histogram: false,
    },
    Schema {
        experiment: "kappa",
        metrics: &[
            ("kappa", Float),
            ("three_over_pi2", Float),
            ("abs_error", Float),
            ("two_ln2_kappa", Float),
            ("haar_mean_return_time", Float),
        ],
        histogram: false,
    },
    Schema {
        experiment: "mass-escape",
        metrics: &[
            ("q", Int),
            ("big_m", Float),
            ("t", Float),
            ("phi", Int),
            ("count", Int),
            ("bound", Float),
            ("within_bound", Bool),
            ("in_hypothesis", Bool),
            ("escalations", Int),
        ],
        histogram: false,
    },
    Schema {
        experiment: "fd-hist",
        metrics: &[
            ("q", Int),
            ("orbits", Int),
            ("dt", Float),
            ("big_m", Float),
            ("tail", Float),
            ("haar_tail", Float),
            ("nx", Int),
            ("nu", Int),
            ("discrepancy", Float),
        ],
        histogram: true,
    },
    Schema {
        experiment: "haar-selftest",
        metrics: &[
            ("samples", Int),
            ("big_m", Float),
            ("tail_mc", Float),
            ("tail_exact", Float),
            ("chi_square_mc_vs_mc", Float),
            ("chi_square_mc_vs_quadrature", Float),
            ("acceptance_rate", Float),
        ],
        histogram: false,
    },
    Schema {
        experiment: "zaremba-census",
        metrics: &[
            ("k", Int),
            ("qmax", Int),
            ("total_relaxed", Int),
            ("total_strict", Int),
            ("exponent_relaxed", Float),
            ("exponent_strict", Float),
            ("windows", Int),
        ],
        histogram: false,
    },
    Schema {
        experiment: "zaremba-height",
        metrics: &[
            ("k", Int),
            ("qmin", Int),
            ("qmax", Int),
            ("dt", Float),
            ("members", Int),
            ("bound", Float),
            ("max_height", Float),
            ("argmax_p", Int),
            ("argmax_q", Int),
            ("argmax_t", Float),
            ("violations", Int),
        ],
        histogram: false,
    },
    Schema {
        experiment: "symmetry-check",
        metrics: &[("qmin", Int), ("qmax", Int), ("pairs", Int), ("failures", Int)],
        histogram: false,
    },
];

pub fn schema(experiment: &str) -> Result<&'static Schema> {
    SCHEMAS
        .iter()
        .find(|s| s.experiment == experiment)
        .ok_or_else(|| Error::Schema(format!("unknown experiment {experiment:?}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub schema_version: u32,
    pub code_version: String,
    pub seed: u64,
    /// Effective configuration, sorted by key.
    pub config: Vec<(String, String)>,
    pub metrics: Vec<(String, Value)>,
    pub histogram: Option<Vec<f64>>,
}

impl ResultRecord {
    pub fn new(experiment: &str, seed: u64, config: Vec<(String, String)>) -> Self {
        ResultRecord {
            experiment: experiment.to_string(),
            schema_version: SCHEMA_VERSION,
            code_version: CODE_VERSION.to_string(),
            seed,
            config,
            metrics: Vec::new(),
            histogram: None,
        }
    }

    pub fn with(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.metrics.push((name.to_string(), v.into()));
        self
    }

    pub fn with_histogram(mut self, h: Vec<f64>) -> Self {
        self.histogram = Some(h);
        self
    }

    pub fn metric(&self, name: &str) -> Option<&Value> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn float(&self, name: &str) -> Option<f64> {
        match self.metric(name)? {
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    /// Checks the record against `s`: names, order and kinds of metrics,
    /// finiteness, and the histogram slot.
    pub fn validate(&self, s: &Schema) -> Result<()> {
        if self.experiment != s.experiment {
            return Err(Error::Schema(format!(
                "record for {:?} in a {:?} stream",
                self.experiment, s.experiment
            )));
        }
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("schema version {}", self.schema_version)));
        }
        let names: Vec<&str> = self.metrics.iter().map(|(n, _)| n.as_str()).collect();
        let want: Vec<&str> = s.metrics.iter().map(|(n, _)| *n).collect();
        if names != want {
            return Err(Error::Schema(format!("metrics {names:?} do not match {want:?}")));
        }
        for ((name, v), (_, kind)) in self.metrics.iter().zip(s.metrics) {
            if !v.fits(*kind) {
                return Err(Error::Schema(format!("metric {name} is not {kind:?}")));
            }
            if let Value::Float(f) = v {
                if !f.is_finite() {
                    return Err(Error::Schema(format!("metric {name} is not finite")));
                }
            }
        }
        match (&self.histogram, s.histogram) {
            (Some(h), true) if h.iter().all(|v| v.is_finite()) => Ok(()),
            (None, false) => Ok(()),
            _ => Err(Error::Schema(format!("histogram slot mismatch for {}", s.experiment))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" | "jsonl" => Ok(Format::Jsonl),
            _ => Err(Error::Config(format!("unknown format {s:?}"))),
        }
    }
}

fn config_cell(c: &[(String, String)]) -> String {
    c.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn parse_config_cell(s: &str) -> Result<Vec<(String, String)>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("config entry {kv:?}")))
        })
        .collect()
}

fn value_cell(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(f) => fmt_float(*f),
        Value::Bool(b) => b.to_string(),
        Value::Text(s) => s.clone(),
        Value::Missing => String::new(),
    }
}

fn parse_cell(s: &str, kind: Kind) -> Result<Value> {
    let bad = || Error::Parse(format!("{s:?} is not {kind:?}"));
    if s.is_empty() && kind != Kind::Text {
        return Ok(Value::Missing);
    }
    Ok(match kind {
        Kind::Int => Value::Int(s.parse().map_err(|_| bad())?),
        Kind::Float => Value::Float(s.parse().map_err(|_| bad())?),
        Kind::Bool => Value::Bool(s.parse().map_err(|_| bad())?),
        Kind::Text => Value::Text(s.to_string()),
    })
}

fn header(s: &Schema) -> Vec<&'static str> {
    let mut h = vec!["experiment", "schema_version", "code_version", "seed", "config"];
    h.extend(s.metrics.iter().map(|(n, _)| *n));
    if s.histogram {
        h.push("histogram");
    }
    h
}

fn float_json(v: f64) -> Json {
    Number::from_f64(round12(v)).map_or(Json::Null, Json::Number)
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        Value::Float(f) => float_json(*f),
        Value::Bool(b) => Json::Bool(*b),
        Value::Text(s) => Json::String(s.clone()),
        Value::Missing => Json::Null,
    }
}

fn json_value(j: &Json, kind: Kind) -> Result<Value> {
    let bad = || Error::Parse(format!("{j} is not {kind:?}"));
    Ok(match (j, kind) {
        (Json::Null, _) => Value::Missing,
        (Json::Number(n), Kind::Int) => Value::Int(n.as_i64().ok_or_else(bad)?),
        (Json::Number(n), Kind::Float) => Value::Float(n.as_f64().ok_or_else(bad)?),
        (Json::Bool(b), Kind::Bool) => Value::Bool(*b),
        (Json::String(s), Kind::Text) => Value::Text(s.clone()),
        _ => return Err(bad()),
    })
}

fn to_json(r: &ResultRecord) -> Json {
    let mut o = Map::new();
    o.insert("experiment".into(), r.experiment.clone().into());
    o.insert("schema_version".into(), r.schema_version.into());
    o.insert("code_version".into(), r.code_version.clone().into());
    o.insert("seed".into(), r.seed.into());
    o.insert(
        "config".into(),
        Json::Object(r.config.iter().map(|(k, v)| (k.clone(), Json::String(v.clone()))).collect()),
    );
    o.insert("metrics".into(), Json::Object(r.metrics.iter().map(|(k, v)| (k.clone(), value_json(v))).collect()));
    if let Some(h) = &r.histogram {
        o.insert("histogram".into(), Json::Array(h.iter().map(|&v| float_json(v)).collect()));
    }
    Json::Object(o)
}

fn from_json(j: &Json) -> Result<ResultRecord> {
    let field = |k: &str| j.get(k).ok_or_else(|| Error::Parse(format!("missing field {k}")));
    let text = |k: &str| -> Result<String> {
        field(k)?.as_str().map(str::to_string).ok_or_else(|| Error::Parse(format!("{k} is not a string")))
    };
    let experiment = text("experiment")?;
    let s = schema(&experiment)?;
    let int = |k: &str| field(k)?.as_u64().ok_or_else(|| Error::Parse(format!("{k} is not an integer")));
    let config = field("config")?
        .as_object()
        .ok_or_else(|| Error::Parse("config is not an object".into()))?
        .iter()
        .map(|(k, v)| v.as_str().map(|v| (k.clone(), v.to_string())).ok_or_else(|| Error::Parse(format!("config {k}"))))
        .collect::<Result<Vec<_>>>()?;
    let metrics_obj = field("metrics")?.as_object().ok_or_else(|| Error::Parse("metrics is not an object".into()))?;
    if metrics_obj.len() != s.metrics.len() {
        return Err(Error::Schema(format!("{} metrics for {experiment}", metrics_obj.len())));
    }
    let metrics = s
        .metrics
        .iter()
        .map(|(n, kind)| {
            let v = metrics_obj.get(*n).ok_or_else(|| Error::Schema(format!("missing metric {n}")))?;
            Ok((n.to_string(), json_value(v, *kind)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let histogram = match j.get("histogram") {
        None => None,
        Some(h) => Some(
            h.as_array()
                .ok_or_else(|| Error::Parse("histogram is not an array".into()))?
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| Error::Parse("histogram entry".into())))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let r = ResultRecord {
        experiment,
        schema_version: u32::try_from(int("schema_version")?).map_err(|_| Error::Parse("schema_version".into()))?,
        code_version: text("code_version")?,
        seed: int("seed")?,
        config,
        metrics,
        histogram,
    };
    r.validate(s)?;
    Ok(r)
}

/// Writes a single-experiment record stream. An empty CSV stream is the
/// header alone; an empty JSON-lines stream is empty.
pub fn emit<W: Write>(out: W, schema: &Schema, records: &[ResultRecord], format: Format) -> Result<()> {
    for r in records {
        r.validate(schema)?;
    }
    let io = |e: std::io::Error| Error::Io { path: "<output>".into(), source: e };
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            let csv_err = |e: csv::Error| Error::Io { path: "<output>".into(), source: e.into() };
            w.write_record(header(schema)).map_err(csv_err)?;
            for r in records {
                let mut row = vec![
                    r.experiment.clone(),
                    r.schema_version.to_string(),
                    r.code_version.clone(),
                    r.seed.to_string(),
                    config_cell(&r.config),
                ];
                row.extend(r.metrics.iter().map(|(_, v)| value_cell(v)));
                if let Some(h) = &r.histogram {
                    row.push(h.iter().map(|&v| fmt_float(v)).collect::<Vec<_>>().join(" "));
                }
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush().map_err(io)?;
        }
        Format::Jsonl => {
            let mut out = out;
            for r in records {
                let line = serde_json::to_string(&to_json(r)).map_err(|e| Error::Parse(e.to_string()))?;
                writeln!(out, "{line}").map_err(io)?;
            }
            out.flush().map_err(io)?;
        }
    }
    Ok(())
}

/// Parses a stream written by [`emit`]. CSV streams name their schema in the
/// header; JSON-lines streams in each record.
pub fn parse<R: Read>(input: R, format: Format) -> Result<(Option<&'static Schema>, Vec<ResultRecord>)> {
    match format {
        Format::Csv => {
            let mut rd = csv::ReaderBuilder::new().from_reader(input);
            let perr = |e: csv::Error| Error::Parse(e.to_string());
            let head: Vec<String> = rd.headers().map_err(perr)?.iter().map(str::to_string).collect();
            let s = SCHEMAS
                .iter()
                .find(|s| header(s) == head)
                .ok_or_else(|| Error::Schema(format!("header {head:?} matches no schema")))?;
            let mut records = Vec::new();
            for row in rd.records() {
                let row = row.map_err(perr)?;
                let cell = |i: usize| row.get(i).unwrap_or("");
                let metrics = s
                    .metrics
                    .iter()
                    .enumerate()
                    .map(|(i, (n, kind))| Ok((n.to_string(), parse_cell(cell(5 + i), *kind)?)))
                    .collect::<Result<Vec<_>>>()?;
                let histogram = if s.histogram {
                    let c = cell(5 + s.metrics.len());
                    Some(
                        c.split(' ')
                            .filter(|t| !t.is_empty())
                            .map(|t| t.parse().map_err(|_| Error::Parse(format!("histogram entry {t:?}"))))
                            .collect::<Result<Vec<f64>>>()?,
                    )
                } else {
                    None
                };
                let r = ResultRecord {
                    experiment: cell(0).to_string(),
                    schema_version: cell(1).parse().map_err(|_| Error::Parse("schema_version".into()))?,
                    code_version: cell(2).to_string(),
                    seed: cell(3).parse().map_err(|_| Error::Parse("seed".into()))?,
                    config: parse_config_cell(cell(4))?,
                    metrics,
                    histogram,
                };
                r.validate(s)?;
                records.push(r);
            }
            Ok((Some(s), records))
        }
        Format::Jsonl => {
            let mut text = String::new();
            let mut input = input;
            input.read_to_string(&mut text).map_err(|e| Error::Io { path: "<input>".into(), source: e })?;
            let records = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| from_json(&serde_json::from_str(l).map_err(|e| Error::Parse(e.to_string()))?))
                .collect::<Result<Vec<_>>>()?;
            let s = match records.first() {
                Some(r) => Some(schema(&r.experiment)?),
                None => None,
            };
            if let Some(s) = s {
                for r in &records {
                    r.validate(s)?;
                }
            }
            Ok((s, records))
        }
    }
}
