//! C ABI over `fsdv-core`.
//!
//! Configs and reports are opaque handles owned by the caller and released
//! with their `_free` function. Fallible calls return an [`FsdvStatus`] and
//! write results through out-pointers; the message for the most recent
//! failure on the calling thread is available from [`fsdv_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fsdv_core::delay::{self, ChannelParams, Complexity, ComputeParams, QueueFormula, QueueParams};
use fsdv_core::detector;
use fsdv_core::model::{Classification, Position, VehicleId};
use fsdv_core::probability::{self, DetectionProbParams};
use fsdv_core::traffic::{self, GreenshieldParams};
use fsdv_core::{guard, sim, Error, ScenarioConfig, SimReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsdvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Parse = 4,
    Io = 5,
    GuardUnavailable = 6,
    ZeroCapacity = 7,
    UnstableQueue = 8,
    /// The requested metric is undefined for this run.
    NotApplicable = 9,
    Runtime = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsdvMetric {
    Tpr = 0,
    Fpr = 1,
    Plr = 2,
    Throughput = 3,
    OverheadBits = 4,
    DC = 5,
    DQ = 6,
    DP = 7,
    DT = 8,
    Rounds = 9,
    TprPerVehicle = 10,
}

/// Opaque scenario configuration.
pub struct FsdvConfig(ScenarioConfig);

/// Opaque run report.
pub struct FsdvReport(SimReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: FsdvStatus, msg: impl Into<String>) -> FsdvStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> FsdvStatus {
    match e {
        Error::Config { .. } | Error::Trace { .. } => FsdvStatus::Validation,
        Error::Parse(_) => FsdvStatus::Parse,
        Error::Io(_) => FsdvStatus::Io,
        Error::GuardUnavailable(_) => FsdvStatus::GuardUnavailable,
        Error::ZeroCapacity { .. } => FsdvStatus::ZeroCapacity,
        Error::UnstableQueue { .. } => FsdvStatus::UnstableQueue,
        Error::EmptyInput(_) => FsdvStatus::InvalidArgument,
        _ => FsdvStatus::Runtime,
    }
}

fn from_error(e: Error) -> FsdvStatus {
    let status = status_of(&e);
    fail(status, e.to_string())
}

/// Runs `f`, turning a panic into [`FsdvStatus::Panic`].
fn guarded(f: impl FnOnce() -> FsdvStatus) -> FsdvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FsdvStatus::Panic, "internal panic"),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fsdv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fsdv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn fsdv_config_default() -> *mut FsdvConfig {
    Box::into_raw(Box::new(FsdvConfig(ScenarioConfig::default())))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, FsdvStatus> {
    if p.is_null() {
        return Err(fail(FsdvStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(FsdvStatus::InvalidArgument, "string is not UTF-8"))
}

/// Parses sectioned `key = value` scenario text.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_config_parse(text: *const c_char, out: *mut *mut FsdvConfig) -> FsdvStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FsdvStatus::NullPointer, "null out pointer");
        }
        let text = match str_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match fsdv_core::parse_scenario(text) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(FsdvConfig(c)));
                FsdvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_config_load(path: *const c_char, out: *mut *mut FsdvConfig) -> FsdvStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FsdvStatus::NullPointer, "null out pointer");
        }
        let path = match str_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match fsdv_core::load_scenario(path) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(FsdvConfig(c)));
                FsdvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fsdv_config_free(cfg: *mut FsdvConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Applies `edit`, keeping the change only if the config still validates.
unsafe fn edit_config(cfg: *mut FsdvConfig, edit: impl FnOnce(&mut ScenarioConfig)) -> FsdvStatus {
    guarded(|| {
        let Some(cfg) = cfg.as_mut() else {
            return fail(FsdvStatus::NullPointer, "null config");
        };
        let mut next = cfg.0.clone();
        edit(&mut next);
        match next.validate() {
            Ok(()) => {
                cfg.0 = next;
                FsdvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsdv_config_set_seed(cfg: *mut FsdvConfig, seed: u64) -> FsdvStatus {
    edit_config(cfg, |c| c.seed = seed)
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsdv_config_set_n_vehicles(cfg: *mut FsdvConfig, n: u32) -> FsdvStatus {
    edit_config(cfg, |c| c.n_vehicles = n)
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsdv_config_set_rogue_fraction(cfg: *mut FsdvConfig, fraction: f64) -> FsdvStatus {
    edit_config(cfg, |c| c.rogue_fraction = fraction)
}

/// Switches to a speed-proportional threshold with the given `alpha`.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsdv_config_set_alpha(cfg: *mut FsdvConfig, alpha: f64) -> FsdvStatus {
    edit_config(cfg, |c| c.set_alpha(alpha))
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsdv_config_set_duration(cfg: *mut FsdvConfig, seconds: f64) -> FsdvStatus {
    edit_config(cfg, |c| c.duration_s = seconds)
}

/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_run(cfg: *const FsdvConfig, out: *mut *mut FsdvReport) -> FsdvStatus {
    guarded(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
            return fail(FsdvStatus::NullPointer, "null config or out pointer");
        };
        match sim::run(&cfg.0) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(FsdvReport(r)));
                FsdvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `report` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fsdv_report_free(report: *mut FsdvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Reads one metric. Undefined rates yield [`FsdvStatus::NotApplicable`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_report_metric(
    report: *const FsdvReport,
    metric: FsdvMetric,
    out: *mut f64,
) -> FsdvStatus {
    guarded(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            return fail(FsdvStatus::NullPointer, "null report or out pointer");
        };
        let r = &r.0;
        let value = match metric {
            FsdvMetric::Tpr => r.tpr,
            FsdvMetric::Fpr => r.fpr,
            FsdvMetric::TprPerVehicle => r.tpr_per_vehicle,
            FsdvMetric::Plr => Some(r.plr),
            FsdvMetric::Throughput => Some(r.avg_throughput),
            FsdvMetric::OverheadBits => Some(r.overhead_bits as f64),
            FsdvMetric::DC => Some(r.delays.d_c),
            FsdvMetric::DQ => r.delays.d_q,
            FsdvMetric::DP => Some(r.delays.d_p),
            FsdvMetric::DT => r.delays.d_t,
            FsdvMetric::Rounds => Some(r.rounds as f64),
        };
        match value {
            Some(v) => {
                *out = v;
                FsdvStatus::Ok
            }
            None => fail(FsdvStatus::NotApplicable, format!("{metric:?} is not applicable")),
        }
    })
}

/// Report as a JSON document; free with [`fsdv_string_free`]. NULL on error.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fsdv_report_json(report: *const FsdvReport) -> *mut c_char {
    match report.as_ref() {
        Some(r) => CString::new(r.0.to_json()).map_or(ptr::null_mut(), CString::into_raw),
        None => {
            set_error("null report");
            ptr::null_mut()
        }
    }
}

/// Greenshield speed at density `rho`. `clamped` may be NULL.
///
/// # Safety
/// `out` must be writable; `clamped` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_guard_speed(
    rho: f64,
    s_max: f64,
    rho_max: f64,
    out: *mut f64,
    clamped: *mut bool,
) -> FsdvStatus {
    if out.is_null() {
        return fail(FsdvStatus::NullPointer, "null out pointer");
    }
    if rho.is_nan() || rho < 0.0 {
        return fail(FsdvStatus::InvalidArgument, "rho must be nonnegative");
    }
    let params = match GreenshieldParams::new(s_max, rho_max) {
        Ok(p) => p,
        Err(e) => return from_error(e),
    };
    let s = traffic::guard_speed(rho, &params);
    *out = s.speed;
    if let Some(c) = clamped.as_mut() {
        *c = s.clamped;
    }
    FsdvStatus::Ok
}

/// Returns 1 for rogue, 0 for honest.
#[no_mangle]
pub extern "C" fn fsdv_classify(s_g: f64, s_rcvd: f64, s_th: f64) -> i32 {
    match detector::classify(s_g, s_rcvd, s_th) {
        Classification::Honest => 0,
        Classification::Rogue => 1,
    }
}

/// Elects the guard among `n` vehicles given as parallel arrays.
///
/// # Safety
/// `xs`, `ys` and `ids` must each point to `n` readable elements;
/// `out_guard` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_select_guard(
    xs: *const f64,
    ys: *const f64,
    ids: *const u32,
    n: usize,
    out_guard: *mut u32,
) -> FsdvStatus {
    if out_guard.is_null() || (n > 0 && (xs.is_null() || ys.is_null() || ids.is_null())) {
        return fail(FsdvStatus::NullPointer, "null array or out pointer");
    }
    let candidates: Vec<(VehicleId, Position)> = if n == 0 {
        Vec::new()
    } else {
        let (xs, ys, ids) = (
            std::slice::from_raw_parts(xs, n),
            std::slice::from_raw_parts(ys, n),
            std::slice::from_raw_parts(ids, n),
        );
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            match Position::try_new(xs[i], ys[i]) {
                Ok(p) => out.push((VehicleId(ids[i]), p)),
                Err(e) => return from_error(e),
            }
        }
        out
    };
    match guard::elect(&candidates) {
        Ok(e) => {
            *out_guard = e.guard.0;
            FsdvStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_communication_delay(
    x_bits: u64,
    bandwidth_hz: f64,
    tx_power: f64,
    channel_coeff: f64,
    noise_power: f64,
    out: *mut f64,
) -> FsdvStatus {
    if out.is_null() {
        return fail(FsdvStatus::NullPointer, "null out pointer");
    }
    let p = ChannelParams {
        x_bits,
        bandwidth_hz,
        tx_power,
        channel_coeff,
        noise_power,
    };
    match delay::communication_delay(&p) {
        Ok(d) => {
            *out = d;
            FsdvStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// `standard_form` selects `λ/(μ(μ−λ))` instead of the closed form.
/// `negative` may be NULL.
///
/// # Safety
/// `out` must be writable; `negative` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_queuing_delay(
    arrival_rate: f64,
    service_rate: f64,
    standard_form: bool,
    out: *mut f64,
    negative: *mut bool,
) -> FsdvStatus {
    if out.is_null() {
        return fail(FsdvStatus::NullPointer, "null out pointer");
    }
    let formula = if standard_form {
        QueueFormula::Standard
    } else {
        QueueFormula::Closed
    };
    let p = QueueParams {
        arrival_rate,
        service_rate,
    };
    match delay::queuing_delay_with(&p, formula) {
        Ok(q) => {
            *out = q.seconds;
            if let Some(n) = negative.as_mut() {
                *n = q.negative;
            }
            FsdvStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Linear work model.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_processing_delay(
    x_bits: u64,
    cycles_per_bit: f64,
    fog_capability: f64,
    out: *mut f64,
) -> FsdvStatus {
    if out.is_null() {
        return fail(FsdvStatus::NullPointer, "null out pointer");
    }
    if !(cycles_per_bit > 0.0 && fog_capability > 0.0) {
        return fail(FsdvStatus::InvalidArgument, "cycles_per_bit and fog_capability must be positive");
    }
    let p = ComputeParams {
        cycles_per_bit,
        fog_capability,
        complexity: Complexity::Linear,
    };
    *out = delay::processing_delay(&p, x_bits);
    FsdvStatus::Ok
}

fn prob_params(x_fog: f64, p_reach: f64, p1: f64, p2: f64) -> Result<DetectionProbParams, FsdvStatus> {
    let p = DetectionProbParams {
        x_fog,
        p_reach,
        p_honest_correct: p1,
        p_rogue_correct: p2,
    };
    p.validate().map_err(from_error)?;
    Ok(p)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_correct_detection_probability(
    x_fog: f64,
    p_reach: f64,
    p_honest_correct: f64,
    p_rogue_correct: f64,
    out: *mut f64,
) -> FsdvStatus {
    if out.is_null() {
        return fail(FsdvStatus::NullPointer, "null out pointer");
    }
    match prob_params(x_fog, p_reach, p_honest_correct, p_rogue_correct) {
        Ok(p) => {
            *out = probability::correct_detection_probability(&p).probability;
            FsdvStatus::Ok
        }
        Err(s) => s,
    }
}

/// # Safety
/// `exact` and `approx` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fsdv_incorrect_detection_probability(
    x_fog: f64,
    p_reach: f64,
    p_honest_correct: f64,
    p_rogue_correct: f64,
    exact: *mut f64,
    approx: *mut f64,
) -> FsdvStatus {
    if exact.is_null() || approx.is_null() {
        return fail(FsdvStatus::NullPointer, "null out pointer");
    }
    match prob_params(x_fog, p_reach, p_honest_correct, p_rogue_correct) {
        Ok(p) => {
            let i = probability::incorrect_detection_probability(&p);
            *exact = i.exact;
            *approx = i.approx;
            FsdvStatus::Ok
        }
        Err(s) => s,
    }
}
