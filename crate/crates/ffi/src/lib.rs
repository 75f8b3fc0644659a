//! C ABI over `qbat`.
//!
//! Every fallible call returns a [`QbatStatus`]; on failure the message is
//! available from [`qbat_last_error_message`] on the same thread. Objects
//! are opaque handles released with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use qbat::dynamics::PropagatorBackend;
use qbat::hamiltonians::{interaction_range, AtaConvention, Family, HamiltonianSpec, ProtocolSpec};
use qbat::metrics::{max_over_time, stored_energy_series, Quantity, TimeGrid, TimeSeries};
use qbat::runner::{self, ExperimentConfig};
use qbat::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Capacity = 5,
    Io = 6,
    /// A sweep point failed; results for the other points were written.
    PartialSweep = 7,
    Panic = 8,
}

/// Column selector for [`qbat_series_copy`] and [`qbat_series_max`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbatColumn {
    Time = 0,
    StoredEnergy = 1,
    Power = 2,
}

impl QbatColumn {
    // Columns cross the boundary as plain integers so a bad value is an
    // error rather than an invalid enum.
    fn from_raw(raw: u32) -> Result<Self, Failure> {
        match raw {
            0 => Ok(QbatColumn::Time),
            1 => Ok(QbatColumn::StoredEnergy),
            2 => Ok(QbatColumn::Power),
            _ => Err(invalid(format!("unknown column {raw}"))),
        }
    }
}

/// A battery/charger protocol.
pub struct QbatProtocol(ProtocolSpec);

/// `ΔE(t)` and `P(t)` sampled on a grid.
pub struct QbatSeries(TimeSeries);

/// A resolved experiment configuration.
pub struct QbatConfig(ExperimentConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> QbatStatus {
    match e {
        Error::Parameter { .. } => QbatStatus::InvalidArgument,
        Error::Numerical { .. } => QbatStatus::Numerical,
        Error::Capacity(_) => QbatStatus::Capacity,
        Error::Config { .. } => QbatStatus::Config,
        Error::SweepPoint { .. } => QbatStatus::PartialSweep,
        Error::Io { .. } => QbatStatus::Io,
    }
}

struct Failure(QbatStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QbatStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(QbatStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QbatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QbatStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            QbatStatus::Panic
        }
    }
}

/// # Safety
/// `s` must be null or a valid nul-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: checked non-null; the caller guarantees it is writable.
    unsafe { out.write(value) };
    Ok(())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qbat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Free the result
/// with [`qbat_string_free`].
#[no_mangle]
pub extern "C" fn qbat_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a pointer returned by this library.
#[no_mangle]
pub unsafe extern "C" fn qbat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// ATA interaction range `K` for a ring of `n` sites.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qbat_interaction_range(n: usize, out: *mut usize) -> QbatStatus {
    guard(|| write_out(out, interaction_range(n)?, "out"))
}

fn spec_from(family: &str, strength: f64, gamma: f64) -> Result<HamiltonianSpec, Failure> {
    let family = Family::parse(family).ok_or_else(|| invalid(format!("unknown family {family:?}")))?;
    let (h, j) = if family.is_interacting() {
        (None, Some(strength))
    } else {
        (Some(strength), None)
    };
    let gamma = family.is_xy().then_some(gamma);
    Ok(HamiltonianSpec::from_fields(family, h, j, gamma, None)?)
}

/// Creates a protocol. `*_strength` is `h` for `FieldZ` and `J` otherwise;
/// `*_gamma` is read only for the XY families.
///
/// # Safety
/// String arguments must be valid nul-terminated strings; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qbat_protocol_new(
    battery_family: *const c_char,
    battery_strength: f64,
    battery_gamma: f64,
    charger_family: *const c_char,
    charger_strength: f64,
    charger_gamma: f64,
    n: usize,
    lambda: f64,
    extended_lambda: bool,
    literal_ata_sum: bool,
    out: *mut *mut QbatProtocol,
) -> QbatStatus {
    guard(|| {
        let battery = spec_from(
            read_str(battery_family, "battery_family")?,
            battery_strength,
            battery_gamma,
        )?;
        let charger = spec_from(
            read_str(charger_family, "charger_family")?,
            charger_strength,
            charger_gamma,
        )?;
        let mut p = ProtocolSpec::new(battery, charger, n).with_lambda(lambda);
        if extended_lambda {
            p = p.extended();
        }
        if literal_ata_sum {
            p = p.with_convention(AtaConvention::Literal);
        }
        p.validate()?;
        write_out(out, Box::into_raw(Box::new(QbatProtocol(p))), "out")
    })
}

/// # Safety
/// `p` must be null or a handle from [`qbat_protocol_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qbat_protocol_free(p: *mut QbatProtocol) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Evolves the protocol from the battery ground state on `[0, end]` with
/// the dense backend.
///
/// # Safety
/// `p` must be a live protocol handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qbat_stored_energy_series(
    p: *const QbatProtocol,
    end: f64,
    step: f64,
    refinement: usize,
    out: *mut *mut QbatSeries,
) -> QbatStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("protocol"))?;
        let grid = TimeGrid::new(end, step, refinement)?;
        let ts = stored_energy_series(&p.0, &grid, &PropagatorBackend::dense())?;
        write_out(out, Box::into_raw(Box::new(QbatSeries(ts))), "out")
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live series handle.
#[no_mangle]
pub unsafe extern "C" fn qbat_series_len(s: *const QbatSeries) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Copies one [`QbatColumn`] into `buf`, which must hold at least
/// [`qbat_series_len`] values.
///
/// # Safety
/// `s` must be a live series handle; `buf` must be writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn qbat_series_copy(
    s: *const QbatSeries,
    column: u32,
    buf: *mut f64,
    capacity: usize,
) -> QbatStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("series"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let data = match QbatColumn::from_raw(column)? {
            QbatColumn::Time => &s.0.times,
            QbatColumn::StoredEnergy => &s.0.delta_e,
            QbatColumn::Power => &s.0.power,
        };
        if capacity < data.len() {
            return Err(invalid(format!("buffer holds {capacity}, need {}", data.len())));
        }
        std::slice::from_raw_parts_mut(buf, data.len()).copy_from_slice(data);
        Ok(())
    })
}

/// Grid maximum of the stored-energy or power column.
///
/// # Safety
/// `s` must be a live series handle; `t` and `value` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qbat_series_max(
    s: *const QbatSeries,
    column: u32,
    t: *mut f64,
    value: *mut f64,
) -> QbatStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("series"))?;
        let which = match QbatColumn::from_raw(column)? {
            QbatColumn::StoredEnergy => Quantity::Energy,
            QbatColumn::Power => Quantity::Power,
            QbatColumn::Time => return Err(invalid("the time column has no maximum of interest")),
        };
        let (t_star, v) = max_over_time(&s.0, which)?;
        write_out(t, t_star, "t")?;
        write_out(value, v, "value")
    })
}

/// # Safety
/// `s` must be null or a live series handle.
#[no_mangle]
pub unsafe extern "C" fn qbat_series_free(s: *mut QbatSeries) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Parses a TOML configuration document.
///
/// # Safety
/// `text` must be a valid nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qbat_config_parse(text: *const c_char, out: *mut *mut QbatConfig) -> QbatStatus {
    guard(|| {
        let cfg = runner::parse_config(read_str(text, "text")?)?;
        write_out(out, Box::into_raw(Box::new(QbatConfig(cfg))), "out")
    })
}

/// Loads the configuration bound to a named preset.
///
/// # Safety
/// `name` must be a valid nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qbat_config_preset(name: *const c_char, out: *mut *mut QbatConfig) -> QbatStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let preset =
            runner::find_preset(name).ok_or_else(|| Failure(QbatStatus::Config, format!("unknown preset {name:?}")))?;
        write_out(out, Box::into_raw(Box::new(QbatConfig(preset.config()))), "out")
    })
}

/// Number of built-in presets.
#[no_mangle]
pub extern "C" fn qbat_preset_count() -> usize {
    runner::PRESETS.len()
}

/// Name of preset `index` as a static string, or null when out of range.
#[no_mangle]
pub extern "C" fn qbat_preset_name(index: usize) -> *const c_char {
    // Names are static; keep nul-terminated copies alive for the process.
    static NAMES: std::sync::OnceLock<Vec<CString>> = std::sync::OnceLock::new();
    let names = NAMES.get_or_init(|| {
        runner::PRESETS
            .iter()
            .map(|p| CString::new(p.name).expect("no nul in preset names"))
            .collect()
    });
    names.get(index).map_or(ptr::null(), |c| c.as_ptr())
}

/// Redirects where [`qbat_config_run`] writes.
///
/// # Safety
/// `cfg` must be a live config handle; `dir` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qbat_config_set_output_dir(cfg: *mut QbatConfig, dir: *const c_char) -> QbatStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("config"))?;
        cfg.0.output.dir = PathBuf::from(read_str(dir, "dir")?);
        Ok(())
    })
}

/// Runs the experiment and writes its CSV and JSON files. `boundary_max`,
/// if non-null, receives whether a maximum sat on the last grid time.
///
/// # Safety
/// `cfg` must be a live config handle; `boundary_max` null or valid.
#[no_mangle]
pub unsafe extern "C" fn qbat_config_run(cfg: *const QbatConfig, boundary_max: *mut bool) -> QbatStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?;
        let report = runner::run(&cfg.0)?;
        if !boundary_max.is_null() {
            boundary_max.write(report.boundary_max);
        }
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a live config handle.
#[no_mangle]
pub unsafe extern "C" fn qbat_config_free(cfg: *mut QbatConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}
