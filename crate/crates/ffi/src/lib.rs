//! C interface to the simulator.
//!
//! Objects cross the boundary as opaque handles created and released by
//! this library. Every fallible call returns an [`FqStatus`]; on failure a
//! description is available from [`fq_last_error`] on the same thread.
//! Panics never unwind into the caller, they surface as `FQ_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use femtoq::channel;
use femtoq::config::{load_config, ScenarioConfig};
use femtoq::coordinator::{self, RunTrace, Scenario};
use femtoq::oracle::{exhaustive_search, OracleResult};
use femtoq::output::write_run;
use femtoq::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    RuntimeError = 4,
    OracleCapExceeded = 5,
    Panic = 6,
}

/// Scenario configuration.
pub struct FqConfig(ScenarioConfig);

/// Completed density sweep.
pub struct FqRun(RunTrace);

/// Exhaustive-search optimum.
pub struct FqOracle(OracleResult);

/// Outcome of one density step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FqDensitySummary {
    pub m: usize,
    pub c_mue: f64,
    pub min_fue_capacity: f64,
    pub sum_capacity: f64,
    pub jain: f64,
    /// Iteration at which the run converged, or the iterations run if it did not.
    pub iterations_to_converge: usize,
    pub converged: bool,
    pub qos_satisfied: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FqStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config { .. } | Error::ConfigParse { .. } => FqStatus::ConfigError,
            Error::EnumerationCap { .. } => FqStatus::OracleCapExceeded,
            Error::Domain(_) | Error::OutOfRange { .. } => FqStatus::InvalidArgument,
            _ => FqStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FqStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FqStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            FqStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(FqStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

/// Message of the last failed call on this thread, or NULL if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn fq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration holding the built-in defaults.
#[no_mangle]
pub extern "C" fn fq_config_default() -> *mut FqConfig {
    Box::into_raw(Box::new(FqConfig(ScenarioConfig::default())))
}

/// Loads and validates a TOML scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fq_config_load(path: *const c_char, out: *mut *mut FqConfig) -> FqStatus {
    guard(|| {
        // an unreadable file is a configuration problem, as on the command line
        let cfg = load_config(path_arg(path)?)
            .map_err(|e| Failure(FqStatus::ConfigError, e.to_string()))?;
        put(out, Box::into_raw(Box::new(FqConfig(cfg))))
    })
}

/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fq_config_set_seed(config: *mut FqConfig, seed: u64) -> FqStatus {
    guard(|| {
        borrow_mut(config, "config")?.0.seed = seed;
        Ok(())
    })
}

/// Sets the largest density of the sweep; rejected values leave the
/// configuration unchanged.
///
/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn fq_config_set_m_max(config: *mut FqConfig, m_max: usize) -> FqStatus {
    guard(|| {
        let cfg = borrow_mut(config, "config")?;
        let mut next = cfg.0.clone();
        next.phases.m_max = m_max;
        next.validate()?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fq_config_free(config: *mut FqConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the full density sweep.
///
/// # Safety
/// `config` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn fq_run(config: *const FqConfig, out: *mut *mut FqRun) -> FqStatus {
    guard(|| {
        let cfg = borrow(config, "config")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let trace = Scenario::new(cfg.0.clone())?.run()?;
        put(out, Box::into_raw(Box::new(FqRun(trace))))
    })
}

/// Number of density steps in a run.
///
/// # Safety
/// `run` must come from this library or be NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn fq_run_density_count(run: *const FqRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.densities.len())
}

/// Summary of density step `index` (0-based; step `index` has `index + 1` femtocells).
///
/// # Safety
/// `run` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn fq_run_summary(
    run: *const FqRun,
    index: usize,
    out: *mut FqDensitySummary,
) -> FqStatus {
    guard(|| {
        let r = borrow(run, "run")?;
        let d = r.0.densities.get(index).ok_or_else(|| {
            Failure(
                FqStatus::InvalidArgument,
                format!("density index {index} out of range 0..{}", r.0.densities.len()),
            )
        })?;
        let s = &d.summary;
        put(
            out,
            FqDensitySummary {
                m: s.m,
                c_mue: s.c_mue,
                min_fue_capacity: s.min_fue_capacity,
                sum_capacity: s.sum_capacity,
                jain: s.jain,
                iterations_to_converge: s.iterations_to_converge.unwrap_or(s.iterations_run),
                converged: s.iterations_to_converge.is_some(),
                qos_satisfied: s.qos_satisfied,
            },
        )
    })
}

/// Writes the CSV artifacts of `run` under `dir`.
///
/// # Safety
/// Handles must come from this library; `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fq_run_write(
    run: *const FqRun,
    config: *const FqConfig,
    dir: *const c_char,
) -> FqStatus {
    guard(|| {
        let r = borrow(run, "run")?;
        let cfg = borrow(config, "config")?;
        write_run(&r.0, &cfg.0, path_arg(dir)?)?;
        Ok(())
    })
}

/// # Safety
/// `run` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fq_run_free(run: *mut FqRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Exhaustive search over the first `m` femtocells in admission order.
///
/// # Safety
/// `config` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn fq_oracle(config: *const FqConfig, m: usize, out: *mut *mut FqOracle) -> FqStatus {
    guard(|| {
        let cfg = borrow(config, "config")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let scenario = Scenario::new(cfg.0.clone())?;
        let order = scenario.admission_order();
        if m == 0 || m > order.len() {
            return Err(Failure(
                FqStatus::InvalidArgument,
                format!("m must be in 1..={}, got {m}", order.len()),
            ));
        }
        let env = scenario.environment(&order[..m])?;
        let result = exhaustive_search(&env, &scenario.actions, cfg.0.oracle.enumeration_cap)?;
        put(out, Box::into_raw(Box::new(FqOracle(result))))
    })
}

/// Optimal sum FUE capacity and whether it meets every QoS constraint.
///
/// # Safety
/// `oracle` must come from this library; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fq_oracle_objective(
    oracle: *const FqOracle,
    objective: *mut f64,
    feasible: *mut bool,
) -> FqStatus {
    guard(|| {
        let o = borrow(oracle, "oracle")?;
        put(objective, o.0.best_objective)?;
        put(feasible, o.0.feasible)
    })
}

/// Copies the optimal power-level indices into `actions`, which holds `len` entries.
///
/// # Safety
/// `oracle` must come from this library; `actions` must hold `len` writable entries.
#[no_mangle]
pub unsafe extern "C" fn fq_oracle_actions(oracle: *const FqOracle, actions: *mut usize, len: usize) -> FqStatus {
    guard(|| {
        let o = borrow(oracle, "oracle")?;
        let best = &o.0.best_action.0;
        if actions.is_null() {
            return Err(null("actions"));
        }
        if len != best.len() {
            return Err(Failure(
                FqStatus::InvalidArgument,
                format!("buffer holds {len} entries, result has {}", best.len()),
            ));
        }
        ptr::copy_nonoverlapping(best.as_ptr(), actions, len);
        Ok(())
    })
}

/// # Safety
/// `oracle` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn fq_oracle_free(oracle: *mut FqOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Residential log-distance path loss in dB.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fq_pathloss_residential(d: f64, pl0: f64, n: f64, d0: f64, out: *mut f64) -> FqStatus {
    guard(|| put(out, channel::pathloss_residential(d, pl0, n, d0)?))
}

/// Indoor-to-outdoor path loss in dB at frequency `f_ghz`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fq_pathloss_indoor_outdoor(d: f64, f_ghz: f64, out: *mut f64) -> FqStatus {
    guard(|| put(out, channel::pathloss_indoor_outdoor(d, f_ghz)?))
}

/// Shannon capacity `log2(1 + sinr)` in b/s/Hz.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fq_capacity(sinr: f64, out: *mut f64) -> FqStatus {
    guard(|| put(out, channel::capacity(sinr)?))
}

/// Jain's fairness index of `len` values.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fq_jain_index(values: *const f64, len: usize, out: *mut f64) -> FqStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let v = std::slice::from_raw_parts(values, len);
        put(out, coordinator::jain_index(v)?)
    })
}
