//! C ABI for the monolab experiment library.
//!
//! All functions return a [`MonolabStatus`]; results come back through out
//! pointers. Handles (`MonolabConfig`, `MonolabExperiment`, `MonolabLog`) are
//! opaque and must be released with their matching `_free` function. The last
//! error message for the calling thread is available via
//! [`monolab_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use monolab::analytics;
use monolab::config::ExperimentConfig;
use monolab::schemes::{ExperimentLog, PreparedExperiment, Scheme};

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let c = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Outcome of a monolab call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonolabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    RuntimeError = 4,
    /// The requested value is not defined for this run.
    Unavailable = 5,
    Panic = 6,
}

/// Learning scheme selector for experiment runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonolabScheme {
    ColdTurkey = 0,
    Dagger = 1,
    TrainingWheels = 2,
    PureStereo = 3,
}

/// Per-run scalar metrics addressable through `monolab_log_metric`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonolabMetric {
    Mse = 0,
    Tpr = 1,
    Fpr = 2,
    Auc = 3,
}

/// Opaque experiment configuration.
pub struct MonolabConfig {
    inner: ExperimentConfig,
}

/// Opaque prepared experiment (world plus trained dictionary).
pub struct MonolabExperiment {
    inner: PreparedExperiment,
}

/// Opaque record of one experiment run.
pub struct MonolabLog {
    inner: ExperimentLog,
}

fn status_of(err: &monolab::Error) -> MonolabStatus {
    match err {
        monolab::Error::Json(_) => MonolabStatus::ParseError,
        monolab::Error::InvalidArgument(_) | monolab::Error::InvalidConfig { .. } => {
            MonolabStatus::InvalidArgument
        }
        _ => MonolabStatus::RuntimeError,
    }
}

fn guard<T>(
    out: *mut T,
    body: impl FnOnce() -> Result<T, (MonolabStatus, String)>,
) -> MonolabStatus {
    if out.is_null() {
        set_error("null output pointer");
        return MonolabStatus::NullPointer;
    }
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(value)) => {
            unsafe { *out = value };
            MonolabStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MonolabStatus::Panic
        }
    }
}

fn lib_err(e: monolab::Error) -> (MonolabStatus, String) {
    (status_of(&e), e.to_string())
}

/// Message for the most recent error on this thread, or null if none. The
/// pointer stays valid until the next failing monolab call on this thread.
#[no_mangle]
pub extern "C" fn monolab_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Probability that `s` consecutive positive samples are all missed.
#[no_mangle]
pub extern "C" fn monolab_collision_prob_iid(tpr: f64, s: u32, out: *mut f64) -> MonolabStatus {
    guard(out, || analytics::collision_prob_iid(tpr, s).map_err(lib_err))
}

/// Collision probability under the classification-persistence model.
#[no_mangle]
pub extern "C" fn monolab_collision_prob_markov(
    p_ident: f64,
    tpr: f64,
    s: u32,
    out: *mut f64,
) -> MonolabStatus {
    guard(out, || {
        analytics::collision_prob_markov(p_ident, tpr, s).map_err(lib_err)
    })
}

/// Expected spurious turns per meter travelled.
#[no_mangle]
pub extern "C" fn monolab_spurious_turn_rate(
    fpr: f64,
    fps: f64,
    speed: f64,
    out: *mut f64,
) -> MonolabStatus {
    guard(out, || {
        analytics::spurious_turn_rate(fpr, fps, speed).map_err(lib_err)
    })
}

unsafe fn slice_arg<'a>(
    data: *const f64,
    len: usize,
) -> Result<&'a [f64], (MonolabStatus, String)> {
    if data.is_null() {
        return Err((MonolabStatus::NullPointer, "null array pointer".into()));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// Mean squared error between two equal-length arrays.
///
/// # Safety
/// `estimates` and `truth` must point to `len` readable f64 values.
#[no_mangle]
pub unsafe extern "C" fn monolab_mse(
    estimates: *const f64,
    truth: *const f64,
    len: usize,
    out: *mut f64,
) -> MonolabStatus {
    guard(out, || {
        let a = slice_arg(estimates, len)?;
        let b = slice_arg(truth, len)?;
        analytics::mse(a, b).map_err(lib_err)
    })
}

/// Area under the ROC curve for estimates against truth labeled by
/// `truth > t_gt`.
///
/// # Safety
/// `estimates` and `truth` must point to `len` readable f64 values.
#[no_mangle]
pub unsafe extern "C" fn monolab_roc_auc(
    estimates: *const f64,
    truth: *const f64,
    len: usize,
    t_gt: f64,
    out: *mut f64,
) -> MonolabStatus {
    guard(out, || {
        let a = slice_arg(estimates, len)?;
        let b = slice_arg(truth, len)?;
        analytics::roc_curve(a, b, t_gt)
            .map(|r| r.auc)
            .map_err(lib_err)
    })
}

/// Two-sided bootstrap p-value for a difference in means, deterministic for
/// a fixed seed.
///
/// # Safety
/// `a` and `b` must point to `len_a` and `len_b` readable f64 values.
#[no_mangle]
pub unsafe extern "C" fn monolab_bootstrap_p(
    a: *const f64,
    len_a: usize,
    b: *const f64,
    len_b: usize,
    iters: usize,
    seed: u64,
    out: *mut f64,
) -> MonolabStatus {
    guard(out, || {
        let a = slice_arg(a, len_a)?;
        let b = slice_arg(b, len_b)?;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        analytics::bootstrap_mean_diff_test(a, b, iters, &mut rng).map_err(lib_err)
    })
}

/// Allocates the default experiment configuration.
#[no_mangle]
pub extern "C" fn monolab_config_default() -> *mut MonolabConfig {
    Box::into_raw(Box::new(MonolabConfig {
        inner: ExperimentConfig::default(),
    }))
}

/// Parses and validates a configuration from a JSON string. Returns null on
/// error; call `monolab_last_error` for the message.
///
/// # Safety
/// `json` must be a valid NUL-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn monolab_config_from_json(json: *const c_char) -> *mut MonolabConfig {
    if json.is_null() {
        set_error("null json pointer");
        return ptr::null_mut();
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config json is not valid UTF-8");
            return ptr::null_mut();
        }
    };
    match serde_json::from_str::<ExperimentConfig>(text) {
        Ok(inner) => match inner.validate() {
            Ok(()) => Box::into_raw(Box::new(MonolabConfig { inner })),
            Err(e) => {
                set_error(e.to_string());
                ptr::null_mut()
            }
        },
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Serializes a configuration to JSON. Free the result with
/// `monolab_string_free`.
///
/// # Safety
/// `cfg` must be a live pointer from a monolab config constructor.
#[no_mangle]
pub unsafe extern "C" fn monolab_config_to_json(cfg: *const MonolabConfig) -> *mut c_char {
    if cfg.is_null() {
        set_error("null config pointer");
        return ptr::null_mut();
    }
    let text = serde_json::to_string_pretty(&(*cfg).inner).unwrap_or_default();
    CString::new(text).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `cfg` must come from a monolab config constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn monolab_config_free(cfg: *mut MonolabConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `s` must come from `monolab_config_to_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn monolab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Validates the config, builds the world and trains the texton dictionary.
/// Returns null on error.
///
/// # Safety
/// `cfg` must be a live pointer from a monolab config constructor.
#[no_mangle]
pub unsafe extern "C" fn monolab_prepare(cfg: *const MonolabConfig) -> *mut MonolabExperiment {
    if cfg.is_null() {
        set_error("null config pointer");
        return ptr::null_mut();
    }
    let config = (*cfg).inner.clone();
    match catch_unwind(AssertUnwindSafe(|| PreparedExperiment::new(config))) {
        Ok(Ok(inner)) => Box::into_raw(Box::new(MonolabExperiment { inner })),
        Ok(Err(e)) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `exp` must come from `monolab_prepare` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn monolab_experiment_free(exp: *mut MonolabExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Runs one experiment. `dagger_beta` is only read for the Dagger scheme.
/// Returns null on error.
///
/// # Safety
/// `exp` must be a live pointer from `monolab_prepare`.
#[no_mangle]
pub unsafe extern "C" fn monolab_experiment_run(
    exp: *const MonolabExperiment,
    scheme: MonolabScheme,
    dagger_beta: f64,
    seed: u64,
) -> *mut MonolabLog {
    if exp.is_null() {
        set_error("null experiment pointer");
        return ptr::null_mut();
    }
    let scheme = match scheme {
        MonolabScheme::ColdTurkey => Scheme::ColdTurkey,
        MonolabScheme::Dagger => Scheme::Dagger { beta: dagger_beta },
        MonolabScheme::TrainingWheels => Scheme::TrainingWheels,
        MonolabScheme::PureStereo => Scheme::PureStereo,
    };
    if let Scheme::Dagger { beta } = scheme {
        if !(0.0..=1.0).contains(&beta) {
            set_error("dagger beta must lie in [0, 1]");
            return ptr::null_mut();
        }
    }
    match catch_unwind(AssertUnwindSafe(|| (*exp).inner.run(scheme, seed))) {
        Ok(Ok(inner)) => Box::into_raw(Box::new(MonolabLog { inner })),
        Ok(Err(e)) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `log` must come from `monolab_experiment_run` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn monolab_log_free(log: *mut MonolabLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

/// Test-phase safety override count.
///
/// # Safety
/// `log` must be a live pointer from `monolab_experiment_run`.
#[no_mangle]
pub unsafe extern "C" fn monolab_log_overrides_test(
    log: *const MonolabLog,
    out: *mut u64,
) -> MonolabStatus {
    guard(out, || {
        if log.is_null() {
            return Err((MonolabStatus::NullPointer, "null log pointer".into()));
        }
        Ok((*log).inner.counters.overrides_test)
    })
}

/// Test-phase avoidance turn count (including forced turns).
///
/// # Safety
/// `log` must be a live pointer from `monolab_experiment_run`.
#[no_mangle]
pub unsafe extern "C" fn monolab_log_turns_test(
    log: *const MonolabLog,
    out: *mut u64,
) -> MonolabStatus {
    guard(out, || {
        if log.is_null() {
            return Err((MonolabStatus::NullPointer, "null log pointer".into()));
        }
        Ok((*log).inner.counters.turns_test)
    })
}

/// Number of collected training samples.
///
/// # Safety
/// `log` must be a live pointer from `monolab_experiment_run`.
#[no_mangle]
pub unsafe extern "C" fn monolab_log_training_samples(
    log: *const MonolabLog,
    out: *mut u64,
) -> MonolabStatus {
    guard(out, || {
        if log.is_null() {
            return Err((MonolabStatus::NullPointer, "null log pointer".into()));
        }
        Ok((*log).inner.training_samples as u64)
    })
}

/// One test-phase quality metric. Returns `Unavailable` when the run has no
/// such value (for example AUC with one-class labels).
///
/// # Safety
/// `log` must be a live pointer from `monolab_experiment_run`.
#[no_mangle]
pub unsafe extern "C" fn monolab_log_metric(
    log: *const MonolabLog,
    metric: MonolabMetric,
    out: *mut f64,
) -> MonolabStatus {
    guard(out, || {
        if log.is_null() {
            return Err((MonolabStatus::NullPointer, "null log pointer".into()));
        }
        let m = (*log).inner.metrics;
        let value = match metric {
            MonolabMetric::Mse => m.mse,
            MonolabMetric::Tpr => m.tpr,
            MonolabMetric::Fpr => m.fpr,
            MonolabMetric::Auc => m.auc,
        };
        value.ok_or((
            MonolabStatus::Unavailable,
            "metric not defined for this run".into(),
        ))
    })
}

/// Writes the per-frame log as CSV.
///
/// # Safety
/// `log` must be live and `path` a valid NUL-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn monolab_log_write_frames_csv(
    log: *const MonolabLog,
    path: *const c_char,
) -> MonolabStatus {
    if log.is_null() || path.is_null() {
        set_error("null pointer");
        return MonolabStatus::NullPointer;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => {
            set_error("path is not valid UTF-8");
            return MonolabStatus::InvalidArgument;
        }
    };
    match (*log).inner.write_frames_csv(Path::new(path)) {
        Ok(()) => MonolabStatus::Ok,
        Err(e) => {
            set_error(e.to_string());
            MonolabStatus::RuntimeError
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calculator_round_trip() {
        let mut out = 0.0;
        assert_eq!(
            monolab_collision_prob_iid(0.95, 30, &mut out),
            MonolabStatus::Ok
        );
        assert!((out - 9.31e-40).abs() / 9.31e-40 < 0.01);
        assert_eq!(
            monolab_spurious_turn_rate(0.05, 30.0, 0.5, &mut out),
            MonolabStatus::Ok
        );
        assert_eq!(out, 3.0);
    }

    #[test]
    fn invalid_arguments_set_last_error() {
        let mut out = 0.0;
        let status = monolab_collision_prob_iid(1.5, 30, &mut out);
        assert_eq!(status, MonolabStatus::InvalidArgument);
        let msg = unsafe { CStr::from_ptr(monolab_last_error()) };
        assert!(msg.to_str().unwrap().contains("tpr"));
    }

    #[test]
    fn null_out_pointer_is_rejected() {
        assert_eq!(
            monolab_collision_prob_iid(0.5, 3, std::ptr::null_mut()),
            MonolabStatus::NullPointer
        );
    }

    #[test]
    fn array_metrics_work_after_null_checks() {
        unsafe {
            let est = [1.0, 2.0, 3.0];
            let truth = [1.5, 2.0, 2.5];
            let mut out = 0.0;
            assert_eq!(
                monolab_mse(est.as_ptr(), truth.as_ptr(), 3, &mut out),
                MonolabStatus::Ok
            );
            assert!((out - 0.5 / 3.0).abs() < 1e-12);
            assert_eq!(
                monolab_mse(std::ptr::null(), truth.as_ptr(), 3, &mut out),
                MonolabStatus::NullPointer
            );
        }
    }

    #[test]
    fn config_json_round_trip_and_free() {
        unsafe {
            let cfg = monolab_config_default();
            assert!(!cfg.is_null());
            let json = monolab_config_to_json(cfg);
            assert!(!json.is_null());
            let parsed = monolab_config_from_json(json);
            assert!(!parsed.is_null());
            monolab_string_free(json);
            monolab_config_free(parsed);
            monolab_config_free(cfg);
        }
    }

    #[test]
    fn bad_config_json_returns_null_with_message() {
        unsafe {
            let bad = CString::new("{\"fps\": -1}").unwrap();
            let cfg = monolab_config_from_json(bad.as_ptr());
            assert!(cfg.is_null());
            let msg = CStr::from_ptr(monolab_last_error()).to_str().unwrap();
            assert!(msg.contains("fps"), "{msg}");
        }
    }

    #[test]
    fn full_experiment_through_the_abi() {
        unsafe {
            let json = CString::new(
                r#"{
                    "phases": {"initial_s": 3.0, "learning_s": 4.0, "test_s": 3.0},
                    "features": {"bootstrap_frames": 30, "kohonen_presentations": 1500,
                                 "samples_per_frame": 80}
                }"#,
            )
            .unwrap();
            let cfg = monolab_config_from_json(json.as_ptr());
            assert!(!cfg.is_null());
            let exp = monolab_prepare(cfg);
            assert!(!exp.is_null());

            let log = monolab_experiment_run(exp, MonolabScheme::TrainingWheels, 0.0, 7);
            assert!(!log.is_null());
            let mut samples = 0u64;
            assert_eq!(
                monolab_log_training_samples(log, &mut samples),
                MonolabStatus::Ok
            );
            assert_eq!(samples, 70);
            let mut mse = f64::NAN;
            assert_eq!(
                monolab_log_metric(log, MonolabMetric::Mse, &mut mse),
                MonolabStatus::Ok
            );
            assert!(mse.is_finite());

            // Same seed, same counters: the ABI is deterministic.
            let log2 = monolab_experiment_run(exp, MonolabScheme::TrainingWheels, 0.0, 7);
            let (mut a, mut b) = (0u64, 0u64);
            monolab_log_overrides_test(log, &mut a);
            monolab_log_overrides_test(log2, &mut b);
            assert_eq!(a, b);

            // Out-of-range mixture probability is rejected without running.
            let bad = monolab_experiment_run(exp, MonolabScheme::Dagger, 1.5, 1);
            assert!(bad.is_null());
            let msg = CStr::from_ptr(monolab_last_error()).to_str().unwrap();
            assert!(msg.contains("beta"));

            monolab_log_free(log2);
            monolab_log_free(log);
            monolab_experiment_free(exp);
            monolab_config_free(cfg);
        }
    }
}
