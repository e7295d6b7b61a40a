//! C ABI over `qmzi-core`.
//!
//! Every function returns a [`QmziStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read back with
//! [`qmzi_last_error`]. Strings handed out by the library are released with
//! [`qmzi_string_free`], handles with [`qmzi_config_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qmzi_core::allocator::{self, Threshold};
use qmzi_core::config::{self, ConfigMap, RunConfig};
use qmzi_core::interferometer::{self, db_to_xi, xi_to_db, InterferometerConfig, Method, SensitivityReport};
use qmzi_core::qcrb::{self, Encoding};
use qmzi_core::validate::{run_validation, ValidateOptions};
use qmzi_core::{sweep, Error};

/// Result codes. 0 to 3 mirror the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmziStatus {
    Ok = 0,
    ValidationFailed = 1,
    Config = 2,
    Domain = 3,
    Divergent = 4,
    OutOfValidity = 5,
    UndefinedSensitivity = 6,
    Precision = 7,
    CutoffTooSmall = 8,
    Unsupported = 9,
    Internal = 10,
    NullPointer = 11,
    InvalidString = 12,
    Panic = 13,
}

impl From<&Error> for QmziStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => QmziStatus::Domain,
            Error::Divergent { .. } => QmziStatus::Divergent,
            Error::OutOfValidity(_) => QmziStatus::OutOfValidity,
            Error::UndefinedSensitivity { .. } => QmziStatus::UndefinedSensitivity,
            Error::Precision(_) => QmziStatus::Precision,
            Error::CutoffTooSmall { .. } => QmziStatus::CutoffTooSmall,
            Error::Unsupported(_) => QmziStatus::Unsupported,
            Error::Config(_) => QmziStatus::Config,
            Error::Internal(_) => QmziStatus::Internal,
        }
    }
}

/// How a sensitivity was obtained.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QmziMethod {
    #[default]
    ClosedForm = 0,
    GaussianEngine = 1,
    GoldenSection = 2,
    GridScan = 3,
}

impl From<Method> for QmziMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::ClosedForm => QmziMethod::ClosedForm,
            Method::GaussianEngine => QmziMethod::GaussianEngine,
            Method::GoldenSection => QmziMethod::GoldenSection,
            Method::GridScan => QmziMethod::GridScan,
        }
    }
}

/// Phase encoding used for the Fisher information.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmziEncoding {
    ReferenceFree = 0,
    Differential = 1,
    ArmAOnly = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QmziReport {
    pub delta_phi: f64,
    pub signal_slope: f64,
    pub noise: f64,
    /// Positive means below the SQL.
    pub db_vs_sql: f64,
    pub method: QmziMethod,
}

impl From<SensitivityReport> for QmziReport {
    fn from(r: SensitivityReport) -> Self {
        QmziReport {
            delta_phi: r.delta_phi,
            signal_slope: r.signal_slope,
            noise: r.noise,
            db_vs_sql: r.db_vs_sql,
            method: r.method.into(),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QmziAllocation {
    pub r1_opt: f64,
    pub delta_phi_opt: f64,
    pub delta_phi_half: f64,
    pub improvement_db: f64,
    pub method: QmziMethod,
}

/// Squeezing needed to reach the SQL. `*_db` is NaN when unreachable.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QmziSqueezing {
    pub vbs_reachable: bool,
    pub vbs_db: f64,
    pub vbs_r1: f64,
    pub balanced_reachable: bool,
    pub balanced_db: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QmziQfi {
    pub qfi: f64,
    /// Infinite when the QFI vanishes.
    pub qcrb: f64,
    pub residual: f64,
}

/// Opaque configuration handle.
pub struct QmziConfig {
    run: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Core(Error),
    Status(QmziStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QmziStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QmziStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            let status = QmziStatus::from(&e);
            set_last_error(e.to_string());
            status
        }
        Ok(Err(Fail::Status(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            QmziStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(QmziStatus::NullPointer, format!("{what} is null"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Status(QmziStatus::InvalidString, format!("{what} is not valid UTF-8")))
}

unsafe fn config_ref<'a>(p: *const QmziConfig) -> Result<&'a QmziConfig, Fail> {
    p.as_ref().ok_or_else(|| null("config"))
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail::Status(QmziStatus::Internal, "output contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library and valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qmzi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qmzi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn qmzi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New handle with the default configuration (N = 1e16, no squeezing,
/// 50:50 splitters, lossless).
#[no_mangle]
pub extern "C" fn qmzi_config_new() -> *mut QmziConfig {
    Box::into_raw(Box::new(QmziConfig { run: RunConfig { base: InterferometerConfig::default(), sweep: None } }))
}

/// Parses key = value or JSON text into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_config_parse(text: *const c_char, out: *mut *mut QmziConfig) -> QmziStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let run = ConfigMap::parse(str_arg(text, "text")?)?.build()?;
        *out = Box::into_raw(Box::new(QmziConfig { run }));
        Ok(())
    })
}

/// New handle holding a built-in preset.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_config_preset(name: *const c_char, out: *mut *mut QmziConfig) -> QmziStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let run = ConfigMap::parse(config::preset_text(str_arg(name, "name")?)?)?.build()?;
        *out = Box::into_raw(Box::new(QmziConfig { run }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qmzi_config_free(cfg: *mut QmziConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

fn field<'a>(base: &'a mut InterferometerConfig, key: &str) -> Result<&'a mut f64, Fail> {
    Ok(match key {
        "n_photons" => &mut base.n_photons,
        "squeeze_xi" => &mut base.squeeze_xi,
        "r1" => &mut base.r1,
        "r2" => &mut base.r2,
        "loss_a" => &mut base.loss_a,
        "loss_b" => &mut base.loss_b,
        "phi_a" => &mut base.phi_a,
        "phi_b" => &mut base.phi_b,
        "delta_phi" => &mut base.delta_phi,
        _ => return Err(Error::Config(format!("unknown key '{key}'")).into()),
    })
}

/// Sets one base parameter. Keys are those of the configuration files:
/// n_photons, squeeze_xi, squeeze_db, theta, r1, r2, loss_a, loss_b, phi_a,
/// phi_b, delta_phi. Values are checked when a computation runs.
///
/// # Safety
/// `cfg` must be a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qmzi_config_set(cfg: *mut QmziConfig, key: *const c_char, value: f64) -> QmziStatus {
    guard(|| {
        let cfg = out_ref(cfg, "config")?;
        let base = &mut cfg.run.base;
        match str_arg(key, "key")? {
            "squeeze_db" => base.squeeze_xi = db_to_xi(value),
            "theta" => base.theta = Some(value),
            k => *field(base, k)? = value,
        }
        Ok(())
    })
}

/// Reads one base parameter; `theta` reports the angle actually used.
///
/// # Safety
/// `cfg` must be a live handle, `key` a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn qmzi_config_get(cfg: *const QmziConfig, key: *const c_char, out: *mut f64) -> QmziStatus {
    guard(|| {
        let mut base = config_ref(cfg)?.run.base;
        let out = out_ref(out, "out")?;
        *out = match str_arg(key, "key")? {
            "squeeze_db" => xi_to_db(base.squeeze_xi),
            "theta" => base.theta(),
            k => *field(&mut base, k)?,
        };
        Ok(())
    })
}

unsafe fn report_with(
    cfg: *const QmziConfig,
    out: *mut QmziReport,
    f: fn(&InterferometerConfig) -> qmzi_core::Result<SensitivityReport>,
) -> QmziStatus {
    guard(|| {
        let base = config_ref(cfg)?.run.base;
        let out = out_ref(out, "out")?;
        *out = f(&base)?.into();
        Ok(())
    })
}

/// Closed form where it applies, Gaussian engine otherwise.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_sensitivity(cfg: *const QmziConfig, out: *mut QmziReport) -> QmziStatus {
    report_with(cfg, out, interferometer::best_sensitivity)
}

/// Closed form only; `QMZI_STATUS_OUT_OF_VALIDITY` outside its domain.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_closed_form(cfg: *const QmziConfig, out: *mut QmziReport) -> QmziStatus {
    report_with(cfg, out, interferometer::closed_form_report)
}

/// Gaussian engine only.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_engine(cfg: *const QmziConfig, out: *mut QmziReport) -> QmziStatus {
    report_with(cfg, out, interferometer::simulate_sensitivity)
}

/// Numerically optimal R1 for the handle's configuration.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_optimize(cfg: *const QmziConfig, out: *mut QmziAllocation) -> QmziStatus {
    guard(|| {
        let base = config_ref(cfg)?.run.base;
        let out = out_ref(out, "out")?;
        let a = allocator::optimal_r1_numeric(&base)?;
        *out = QmziAllocation {
            r1_opt: a.r1_opt,
            delta_phi_opt: a.delta_phi_opt,
            delta_phi_half: a.delta_phi_half,
            improvement_db: a.improvement_db,
            method: a.method.into(),
        };
        Ok(())
    })
}

/// Closed-form optimal R1 at loss `loss` in arm a and squeeze parameter `xi`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_optimal_r1(loss: f64, xi: f64, out: *mut f64) -> QmziStatus {
    guard(|| {
        *out_ref(out, "out")? = allocator::optimal_r1_closed(loss, xi)?;
        Ok(())
    })
}

/// Loss at which the squeezed 50:50 interferometer falls back to the SQL.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_loss_rate_limit(xi: f64, out: *mut f64) -> QmziStatus {
    guard(|| {
        *out_ref(out, "out")? = allocator::loss_rate_limit(xi)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_min_squeezing_for_sql(loss: f64, out: *mut QmziSqueezing) -> QmziStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let req = allocator::min_squeezing_for_sql(loss)?;
        let (vbs_reachable, vbs_db, vbs_r1) = match req.vbs {
            Threshold::Reachable { db, r1, .. } => (true, db, r1),
            Threshold::Unreachable => (false, f64::NAN, f64::NAN),
        };
        *out = QmziSqueezing {
            vbs_reachable,
            vbs_db,
            vbs_r1,
            balanced_reachable: req.balanced.db().is_some(),
            balanced_db: req.balanced.db().unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Quantum Fisher information of the phase for the handle's configuration.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_qfi(cfg: *const QmziConfig, encoding: QmziEncoding, out: *mut QmziQfi) -> QmziStatus {
    guard(|| {
        let base = config_ref(cfg)?.run.base;
        let out = out_ref(out, "out")?;
        let enc = match encoding {
            QmziEncoding::ReferenceFree => Encoding::ReferenceFree,
            QmziEncoding::Differential => Encoding::Differential,
            QmziEncoding::ArmAOnly => Encoding::ArmAOnly,
        };
        let r = qcrb::qfi_phase(&base, enc)?;
        *out = QmziQfi { qfi: r.qfi, qcrb: r.qcrb.unwrap_or(f64::INFINITY), residual: r.residual };
        Ok(())
    })
}

/// Runs the handle's sweep and returns the CSV table. `threads` = 0 uses
/// the global pool. Free the result with [`qmzi_string_free`].
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmzi_sweep_csv(cfg: *const QmziConfig, threads: usize, out: *mut *mut c_char) -> QmziStatus {
    guard(|| {
        let cfg = config_ref(cfg)?;
        let out = out_ref(out, "out")?;
        let spec = cfg.run.sweep.as_ref().ok_or_else(|| Error::Config("configuration has no sweep axis".into()))?;
        let rows = if threads == 0 { sweep::run(spec)? } else { sweep::run_with_threads(spec, threads)? };
        let mut buf = Vec::new();
        sweep::write_csv(&rows, &mut buf).map_err(|e| Error::Internal(e.to_string()))?;
        *out = into_c_string(String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))?)?;
        Ok(())
    })
}

/// Runs the built-in consistency checks with the given Fock cutoff (0 picks
/// the default) and returns the text report. Returns
/// `QMZI_STATUS_VALIDATION_FAILED` with the report still set if any check fails.
///
/// # Safety
/// `out` must be a valid pointer. Free the result with [`qmzi_string_free`].
#[no_mangle]
pub unsafe extern "C" fn qmzi_validate(fock_cutoff: usize, out: *mut *mut c_char) -> QmziStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let mut opts = ValidateOptions::default();
        if fock_cutoff > 0 {
            opts.fock_cutoff = fock_cutoff;
        }
        let report = run_validation(&opts);
        let text: String = report
            .checks
            .iter()
            .map(|c| format!("[{}] {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect();
        *out = into_c_string(text)?;
        match report.first_failure() {
            None => Ok(()),
            Some(c) => Err(Fail::Status(QmziStatus::ValidationFailed, format!("validation failed: {} ({})", c.name, c.detail))),
        }
    })
}
