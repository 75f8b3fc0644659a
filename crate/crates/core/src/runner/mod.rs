//! Configuration, figure presets, and emission of result files.

mod config;
mod presets;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::{load_config, parse_config, ExperimentConfig, OutputSpec, SweepSpec, DEFAULT_OUTPUT_DIR};
pub use presets::{find as find_preset, list_presets, FigurePreset, PresetRow, PRESETS};

use crate::error::{Error, Result};
use crate::metrics::{
    self, linear_fit, log10_fit, ChargingRun, LinearFit, Quantity, SweepParameter, SweepRecord, TimeSeries,
};

/// Environment variable overriding the sweep worker-pool size.
pub const WORKERS_ENV: &str = "QBAT_WORKERS";

pub const SERIES_FILE: &str = "series.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const FIT_FILE: &str = "fit.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Twelve significant digits in scientific notation, with `-0` printed as `0`.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

pub fn series_csv(ts: &TimeSeries) -> String {
    let mut out = String::from("t,delta_e,power\n");
    for i in 0..ts.len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_float(ts.times[i]),
            format_float(ts.delta_e[i]),
            format_float(ts.power[i])
        );
    }
    out
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("param,value,de_max,t_e,p_max,t_p\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.parameter.name(),
            format_float(r.value),
            format_float(r.delta_e_max),
            format_float(r.t_at_e_max),
            format_float(r.p_max),
            format_float(r.t_at_p_max)
        );
    }
    out
}

/// Hex SHA-256 of the canonical JSON form of the resolved configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(canonical))
}

/// What a run produced.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub records: Vec<SweepRecord>,
    pub fit: Option<LinearFit>,
    /// Some reported maximum sat on the last grid time.
    pub boundary_max: bool,
    pub partial: bool,
}

fn worker_count() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(WORKERS_ENV, format!("{s:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

fn fit_for(parameter: SweepParameter, records: &[SweepRecord]) -> Option<(LinearFit, &'static str)> {
    if records.len() < 3 {
        return None;
    }
    match parameter {
        SweepParameter::J => log10_fit(records).ok().map(|f| (f, "p_max vs log10(J)")),
        SweepParameter::Lambda => {
            let xs: Vec<f64> = records.iter().map(|r| r.value).collect();
            let ys: Vec<f64> = records.iter().map(|r| r.p_max).collect();
            linear_fit(&xs, &ys).ok().map(|f| (f, "p_max vs lambda"))
        }
        SweepParameter::N => {
            let xs: Vec<f64> = records.iter().map(|r| r.value).collect();
            let ys: Vec<f64> = records.iter().map(|r| r.p_max).collect();
            linear_fit(&xs, &ys).ok().map(|f| (f, "p_max vs N"))
        }
    }
}

fn point_file(parameter: SweepParameter, index: usize) -> String {
    format!("series_{}_{index:03}.csv", parameter.name())
}

/// Executes an experiment and writes its result files.
///
/// A failing sweep point still leaves the other points' results on disk,
/// with `partial = true` in the manifest; the error names the point.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let workers = worker_count()?;
    let started = Instant::now();
    let mut writer = Writer::new(&cfg.output.dir)?;

    let mut records = Vec::new();
    let mut fit = None;
    let mut fit_axis = None;
    let mut failure = None;
    let mut single_peaks = None;

    match &cfg.sweep {
        None => {
            let mut run = ChargingRun::new(&cfg.protocol, &cfg.grid, &cfg.backend)?;
            let e = run.peak(Quantity::Energy)?;
            let p = run.peak(Quantity::Power)?;
            writer.write(SERIES_FILE, &series_csv(run.series()))?;
            single_peaks = Some((e, p));
        }
        Some(sweep) => {
            let go = || {
                metrics::sweep(
                    &cfg.protocol,
                    sweep.parameter,
                    &sweep.values,
                    &cfg.grid,
                    &cfg.backend,
                    cfg.output.series,
                )
            };
            let outcome = match workers {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::config(WORKERS_ENV, e.to_string()))?
                    .install(go),
                None => go(),
            };
            writer.write(SWEEP_FILE, &sweep_csv(&outcome.records))?;
            if cfg.output.series {
                for (rec, ts) in outcome.records.iter().zip(&outcome.series) {
                    let index = sweep.values.iter().position(|&v| v == rec.value).expect("swept value");
                    writer.write(&point_file(sweep.parameter, index), &series_csv(ts))?;
                }
            }
            if let Some((f, axis)) = fit_for(sweep.parameter, &outcome.records) {
                writer.write(FIT_FILE, &serde_json::to_string_pretty(&f).expect("fit serializes"))?;
                fit = Some(f);
                fit_axis = Some(axis);
            }
            records = outcome.records;
            failure = outcome.failure.map(|f| (sweep.parameter, f));
        }
    }

    let boundary_max =
        records.iter().any(|r| r.boundary_max) || single_peaks.is_some_and(|(e, p)| e.at_boundary || p.at_boundary);
    let partial = failure.is_some();
    let mut manifest = json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": cfg,
        "config_hash": config_hash(cfg),
        "preset": cfg.preset,
        "backend": cfg.backend,
        "grid": cfg.grid,
        "ata_convention": cfg.protocol.ata_convention,
        "literal_ata_sum": cfg.literal_ata_sum(),
        "extended_lambda": cfg.extended_lambda(),
        "seed": cfg.seed,
        "workers": workers.unwrap_or_else(rayon::current_num_threads),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "boundary_max": boundary_max,
        "partial": partial,
    });
    if let Some((e, p)) = single_peaks {
        manifest["maxima"] = json!({
            "delta_e_max": e.value, "t_at_e_max": e.t,
            "p_max": p.value, "t_at_p_max": p.t,
        });
    }
    if let (Some(f), Some(axis)) = (fit, fit_axis) {
        manifest["fit"] = json!({ "of": axis, "slope": f.slope, "intercept": f.intercept, "r2": f.r_squared });
    }
    if let Some((param, f)) = &failure {
        manifest["failure"] = json!({
            "parameter": param.name(), "value": f.value, "error": f.error.to_string(),
        });
    }
    writer.write(
        MANIFEST_FILE,
        &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    if let Some((param, f)) = failure {
        return Err(Error::SweepPoint {
            parameter: param.name(),
            value: f.value,
            source: Box::new(f.error),
        });
    }
    Ok(RunReport {
        dir: writer.dir,
        files: writer.files,
        records,
        fit,
        boundary_max,
        partial,
    })
}

/// Runs a named preset, optionally redirecting its output.
pub fn run_preset(name: &str, out_dir: Option<&Path>) -> Result<RunReport> {
    let preset = find_preset(name).ok_or_else(|| Error::config("preset", format!("unknown preset {name:?}")))?;
    let mut cfg = preset.config();
    if let Some(dir) = out_dir {
        cfg.output.dir = dir.to_path_buf();
    }
    run(&cfg)
}
