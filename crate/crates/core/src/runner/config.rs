//! Experiment configuration: a TOML document with a fixed set of sections.
//!
//! ```toml
//! preset = "fig2a"          # optional starting point; keys below override it
//! extended_lambda = false   # allow λ ∈ [0, 5]
//! literal_ata_sum = false   # count antipodal ATA bonds twice
//! seed = 0
//!
//! [protocol]
//! N = 10
//! lambda = 1.0
//! t_on = "always"           # or a switch-off time
//!
//! [battery]                 # a present section replaces the preset's spec
//! family = "FieldZ"
//! h = 1.0
//!
//! [charger]
//! family = "IsingATA"       # FieldZ | IsingNN | IsingATA | XYNN | XYATA
//! J = 1.0                   # gamma for XY families, K for ATA families
//!
//! [grid]
//! end = 100.0
//! step = 0.05
//! refinement = 10
//!
//! [backend]
//! kind = "dense"            # or "krylov"
//! krylov_dim = 30
//! tolerance = 1e-10
//!
//! [sweep]                   # presence selects sweep mode
//! parameter = "lambda"      # lambda | N | J
//! values = [0.0, 0.5, 1.0]  # or: start, stop, step
//!
//! [output]
//! dir = "qbat-output"
//! series = false            # also write one series CSV per sweep point
//! ```

use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use super::presets;
use crate::dynamics::{BackendKind, PropagatorBackend};
use crate::error::{Error, Result};
use crate::hamiltonians::{AtaConvention, ChargingWindow, Family, HamiltonianSpec, LambdaRange, ProtocolSpec};
use crate::metrics::{SweepParameter, TimeGrid};

pub const DEFAULT_OUTPUT_DIR: &str = "qbat-output";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Write a time series per sweep point (single runs always write one).
    pub series: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            series: false,
        }
    }
}

/// A fully resolved and validated experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub protocol: ProtocolSpec,
    pub grid: TimeGrid,
    pub backend: PropagatorBackend,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
    /// Only consumed by randomized test batteries.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn single(protocol: ProtocolSpec) -> Self {
        ExperimentConfig {
            preset: None,
            protocol,
            grid: TimeGrid::default(),
            backend: PropagatorBackend::default(),
            sweep: None,
            output: OutputSpec::default(),
            seed: 0,
        }
    }

    pub fn literal_ata_sum(&self) -> bool {
        self.protocol.ata_convention == AtaConvention::Literal
    }

    pub fn extended_lambda(&self) -> bool {
        self.protocol.lambda_range == LambdaRange::Extended
    }

    /// Checks every consumed value, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        let p = &self.protocol;
        in_section("battery", p.battery.validate(p.n))?;
        in_section("charger", p.charger.validate(p.n))?;
        in_section("protocol", p.validate())?;
        in_section("grid", self.grid.validate())?;
        if self.backend.kind == BackendKind::KrylovLanczos {
            in_section("backend", self.backend.validate())?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::config("sweep.values", "no sweep points"));
            }
            for (i, &v) in sweep.values.iter().enumerate() {
                sweep
                    .parameter
                    .apply(p, v)
                    .map_err(|e| Error::config(format!("sweep.values[{i}]"), e.to_string()))?;
            }
        }
        Ok(())
    }
}

/// Rewrites a parameter error as a config error keyed under `section`.
fn in_section<T>(section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parameter { name, .. } => {
            let key = match (section, name) {
                (_, "N") | (_, "lambda") | (_, "t_on") => format!("protocol.{name}"),
                ("grid", "refinement_factor") => "grid.refinement".to_string(),
                (s, n) => format!("{s}.{n}"),
            };
            Error::config(key, e.to_string())
        }
        other => other,
    })
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

fn mismatch(key: &str, want: &str, v: &Value) -> Error {
    Error::config(key, format!("expected {want}, found {}", type_name(v)))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(mismatch(key, "a number", v)),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(i) => Err(Error::config(key, format!("{i} must be non-negative"))),
        _ => Err(mismatch(key, "an integer", v)),
    }
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| mismatch(key, "a boolean", v))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| mismatch(key, "a string", v))
}

/// A section of the document with its keys checked against an allow-list.
struct Section<'a> {
    name: &'a str,
    table: &'a Table,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, v: &'a Value, allowed: &[&str]) -> Result<Self> {
        let table = v.as_table().ok_or_else(|| mismatch(name, "a section", v))?;
        for k in table.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(Error::config(format!("{name}.{k}"), "unknown key"));
            }
        }
        Ok(Section { name, table })
    }

    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn get<T>(&self, k: &str, conv: impl Fn(&str, &Value) -> Result<T>) -> Result<Option<T>> {
        self.table.get(k).map(|v| conv(&self.key(k), v)).transpose()
    }
}

fn parse_spec(s: &Section) -> Result<HamiltonianSpec> {
    let family_key = s.key("family");
    let name = s
        .get("family", |k, v| as_str(k, v).map(str::to_owned))?
        .ok_or_else(|| Error::config(&family_key, "missing"))?;
    let family = Family::parse(&name).ok_or_else(|| {
        let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
        Error::config(
            &family_key,
            format!("unknown family {name:?}; expected one of {}", names.join(", ")),
        )
    })?;
    let spec = HamiltonianSpec::from_fields(
        family,
        s.get("h", as_f64)?,
        s.get("J", as_f64)?,
        s.get("gamma", as_f64)?,
        s.get("K", as_usize)?,
    );
    in_section(s.name, spec)
}

fn parse_values(s: &Section) -> Result<Vec<f64>> {
    let listed = s.get("values", |k, v| {
        let arr = v.as_array().ok_or_else(|| mismatch(k, "an array", v))?;
        arr.iter()
            .enumerate()
            .map(|(i, x)| as_f64(&format!("{k}[{i}]"), x))
            .collect::<Result<Vec<_>>>()
    })?;
    let start = s.get("start", as_f64)?;
    let stop = s.get("stop", as_f64)?;
    let step = s.get("step", as_f64)?;
    match (listed, start, stop, step) {
        (Some(v), None, None, None) => Ok(v),
        (None, Some(a), Some(b), Some(h)) => {
            if h.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || b.partial_cmp(&a).is_none_or(|o| o.is_lt()) {
                return Err(Error::config(s.key("step"), "need step > 0 and stop >= start"));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize;
            // Round to the step's decimal resolution so 0.1-steps print cleanly.
            let scale = 1e12;
            Ok((0..=count)
                .map(|i| ((a + i as f64 * h) * scale).round() / scale)
                .collect())
        }
        (Some(_), ..) => Err(Error::config(s.key("values"), "give either values or start/stop/step")),
        _ => Err(Error::config(s.key("values"), "missing (or give start, stop and step)")),
    }
}

const TOP_KEYS: &[&str] = &[
    "preset",
    "extended_lambda",
    "literal_ata_sum",
    "seed",
    "protocol",
    "battery",
    "charger",
    "grid",
    "backend",
    "sweep",
    "output",
];

const SPEC_KEYS: &[&str] = &["family", "h", "J", "gamma", "K"];

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let doc: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
    for k in doc.keys() {
        if !TOP_KEYS.contains(&k.as_str()) {
            return Err(Error::config(k, "unknown key"));
        }
    }
    let preset = doc.get("preset").map(|v| as_str("preset", v)).transpose()?;
    let base = match preset {
        Some(name) => Some(
            presets::find(name)
                .ok_or_else(|| Error::config("preset", format!("unknown preset {name:?}")))?
                .config(),
        ),
        None => None,
    };

    let battery = doc
        .get("battery")
        .map(|v| Section::new("battery", v, SPEC_KEYS).and_then(|s| parse_spec(&s)))
        .transpose()?
        .or(base.as_ref().map(|b| b.protocol.battery))
        .ok_or_else(|| Error::config("battery", "missing section"))?;
    let charger = doc
        .get("charger")
        .map(|v| Section::new("charger", v, SPEC_KEYS).and_then(|s| parse_spec(&s)))
        .transpose()?
        .or(base.as_ref().map(|b| b.protocol.charger))
        .ok_or_else(|| Error::config("charger", "missing section"))?;

    let mut protocol = match &base {
        Some(b) => ProtocolSpec {
            battery,
            charger,
            ..b.protocol
        },
        None => {
            if !doc.contains_key("protocol") {
                return Err(Error::config("protocol", "missing section"));
            }
            ProtocolSpec::new(battery, charger, 0)
        }
    };
    if let Some(v) = doc.get("protocol") {
        let s = Section::new("protocol", v, &["N", "lambda", "t_on"])?;
        match s.get("N", as_usize)? {
            Some(n) => protocol.n = n,
            None if base.is_none() => return Err(Error::config("protocol.N", "missing")),
            None => {}
        }
        if let Some(l) = s.get("lambda", as_f64)? {
            protocol.lambda = l;
        }
        if let Some(v) = s.table.get("t_on") {
            protocol.t_on = match v {
                Value::String(s) if s == "always" => ChargingWindow::AlwaysOn,
                Value::Float(_) | Value::Integer(_) => ChargingWindow::Until(as_f64("protocol.t_on", v)?),
                _ => return Err(mismatch("protocol.t_on", "\"always\" or a time", v)),
            };
        }
    }
    if let Some(v) = doc.get("extended_lambda") {
        protocol.lambda_range = if as_bool("extended_lambda", v)? {
            LambdaRange::Extended
        } else {
            LambdaRange::Canonical
        };
    }
    if let Some(v) = doc.get("literal_ata_sum") {
        protocol.ata_convention = if as_bool("literal_ata_sum", v)? {
            AtaConvention::Literal
        } else {
            AtaConvention::SingleCount
        };
    }

    let mut grid = base.as_ref().map(|b| b.grid).unwrap_or_default();
    if let Some(v) = doc.get("grid") {
        let s = Section::new("grid", v, &["end", "step", "refinement"])?;
        if let Some(x) = s.get("end", as_f64)? {
            grid.end = x;
        }
        if let Some(x) = s.get("step", as_f64)? {
            grid.step = x;
        }
        if let Some(x) = s.get("refinement", as_usize)? {
            grid.refinement_factor = x;
        }
    }

    let mut backend = base.as_ref().map(|b| b.backend).unwrap_or_default();
    if let Some(v) = doc.get("backend") {
        let s = Section::new("backend", v, &["kind", "krylov_dim", "tolerance"])?;
        if let Some(kind) = s.get("kind", |k, v| as_str(k, v).map(str::to_owned))? {
            backend.kind = match kind.as_str() {
                "dense" => BackendKind::DenseEigen,
                "krylov" => BackendKind::KrylovLanczos,
                other => {
                    return Err(Error::config(
                        "backend.kind",
                        format!("unknown backend {other:?}; expected \"dense\" or \"krylov\""),
                    ))
                }
            };
        }
        if let Some(m) = s.get("krylov_dim", as_usize)? {
            backend.krylov_dim = m;
        }
        if let Some(t) = s.get("tolerance", as_f64)? {
            backend.tolerance = t;
        }
    }

    let mut sweep = base.as_ref().and_then(|b| b.sweep.clone());
    if let Some(v) = doc.get("sweep") {
        let s = Section::new("sweep", v, &["parameter", "values", "start", "stop", "step"])?;
        let name = s
            .get("parameter", |k, v| as_str(k, v).map(str::to_owned))?
            .ok_or_else(|| Error::config("sweep.parameter", "missing"))?;
        let parameter = SweepParameter::parse(&name).ok_or_else(|| {
            Error::config(
                "sweep.parameter",
                format!("unknown parameter {name:?}; expected lambda, N or J"),
            )
        })?;
        sweep = Some(SweepSpec {
            parameter,
            values: parse_values(&s)?,
        });
    }

    let mut output = base.as_ref().map(|b| b.output.clone()).unwrap_or_default();
    if let Some(v) = doc.get("output") {
        let s = Section::new("output", v, &["dir", "series"])?;
        if let Some(d) = s.get("dir", |k, v| as_str(k, v).map(PathBuf::from))? {
            output.dir = d;
        }
        if let Some(b) = s.get("series", as_bool)? {
            output.series = b;
        }
    }

    let seed = match doc.get("seed") {
        Some(v) => as_usize("seed", v)? as u64,
        None => base.as_ref().map_or(0, |b| b.seed),
    };

    let cfg = ExperimentConfig {
        preset: preset.map(str::to_owned),
        protocol,
        grid,
        backend,
        sweep,
        output,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
