//! C interface to `tawdi`.
//!
//! Fallible functions return a [`TawdiStatus`]. On failure a description is
//! available from [`tawdi_last_error`] until the next call on the same thread.
//! Policies and disturbance models are opaque handles released with their
//! `*_free` function. Panics never cross the boundary; they surface as
//! `TAWDI_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use tawdi::config::ExperimentConfig;
use tawdi::disturbance::{inject, DisturbanceModel};
use tawdi::learner::run_experiment;
use tawdi::metrics::welch_t_test;
use tawdi::output::write_outputs;
use tawdi::policy::PolicyNetwork;
use tawdi::weighting::{normalize_weights, optimality_likelihood, WeightingConfig};
use tawdi::{Action, Error, RngStream, State};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TawdiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Config = 4,
    Model = 5,
    DegenerateWeights = 6,
    Divergence = 7,
    Statistics = 8,
    Io = 9,
    Checkpoint = 10,
    /// A panic inside the library; the message has the details.
    Internal = 11,
}

/// Result of a two-sided Welch t-test.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TawdiWelch {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Feedforward tanh policy.
pub struct TawdiPolicy {
    inner: PolicyNetwork,
}

/// Gaussian action disturbance `N(0, Σ)`.
pub struct TawdiDisturbance {
    inner: DisturbanceModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: TawdiStatus,
    message: String,
}

impl Failure {
    fn new(status: TawdiStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Self {
        Self::new(TawdiStatus::NullPointer, format!("`{what}` is null"))
    }
}

fn status_of(e: &Error) -> TawdiStatus {
    match e {
        Error::Dimension { .. } => TawdiStatus::Dimension,
        Error::Input(_) | Error::Capacity { .. } | Error::InfiniteDivergence(_) => TawdiStatus::InvalidArgument,
        Error::Config { .. } => TawdiStatus::Config,
        Error::Model(_) => TawdiStatus::Model,
        Error::DegenerateWeights => TawdiStatus::DegenerateWeights,
        Error::Divergence { .. } => TawdiStatus::Divergence,
        Error::Statistics(_) => TawdiStatus::Statistics,
        Error::Checkpoint(_) | Error::Json(_) => TawdiStatus::Checkpoint,
        Error::Io(_) => TawdiStatus::Io,
        Error::Run { source, .. } => status_of(source),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(status_of(&e), e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TawdiStatus {
    set_last_error("");
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure::new(TawdiStatus::Internal, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => TawdiStatus::Ok,
        Err(f) => {
            set_last_error(&f.message);
            f.status
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn to_path(ptr: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    let s = CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(TawdiStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn out_ptr<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure::null(what))
}

fn check_len(what: &str, expected: usize, actual: usize) -> Result<(), Failure> {
    if expected != actual {
        return Err(Failure::new(
            TawdiStatus::Dimension,
            format!("{what}: expected length {expected}, got {actual}"),
        ));
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tawdi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the most recent failure on this thread, or an empty
/// string. The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn tawdi_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Creates a randomly initialized policy with layer widths `sizes`
/// (state dimension first, action dimension last).
///
/// # Safety
/// `sizes` must point to `n_sizes` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tawdi_policy_new(
    sizes: *const usize,
    n_sizes: usize,
    init_scale: f64,
    seed: u64,
    out: *mut *mut TawdiPolicy,
) -> TawdiStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let sizes = slice(sizes, n_sizes, "sizes")?;
        let inner = PolicyNetwork::random(sizes, init_scale, &mut RngStream::new(seed, 0))?;
        *out = Box::into_raw(Box::new(TawdiPolicy { inner }));
        Ok(())
    })
}

/// Reads a checkpoint written by `tawdi_policy_save` or the `tawdi` CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tawdi_policy_load(path: *const c_char, out: *mut *mut TawdiPolicy) -> TawdiStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let inner = PolicyNetwork::load(to_path(path, "path")?)?;
        *out = Box::into_raw(Box::new(TawdiPolicy { inner }));
        Ok(())
    })
}

/// # Safety
/// `policy` must come from this library and `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tawdi_policy_save(policy: *const TawdiPolicy, path: *const c_char) -> TawdiStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| Failure::null("policy"))?;
        p.inner.save(to_path(path, "path")?)?;
        Ok(())
    })
}

/// Evaluates the policy at `state`, writing the action into `action`.
///
/// # Safety
/// `policy` must come from this library; `state` and `action` must hold
/// `state_len` and `action_len` values.
#[no_mangle]
pub unsafe extern "C" fn tawdi_policy_forward(
    policy: *const TawdiPolicy,
    state: *const f64,
    state_len: usize,
    action: *mut f64,
    action_len: usize,
) -> TawdiStatus {
    guard(|| {
        let p = &policy.as_ref().ok_or_else(|| Failure::null("policy"))?.inner;
        check_len("state", p.state_dim(), state_len)?;
        check_len("action", p.action_dim(), action_len)?;
        let s = State::new(slice(state, state_len, "state")?.to_vec());
        let a = p.forward(&s)?;
        slice_mut(action, action_len, "action")?.copy_from_slice(a.as_slice());
        Ok(())
    })
}

/// State dimension, or 0 for a null handle.
///
/// # Safety
/// `policy` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tawdi_policy_state_dim(policy: *const TawdiPolicy) -> usize {
    policy.as_ref().map_or(0, |p| p.inner.state_dim())
}

/// Action dimension, or 0 for a null handle.
///
/// # Safety
/// `policy` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn tawdi_policy_action_dim(policy: *const TawdiPolicy) -> usize {
    policy.as_ref().map_or(0, |p| p.inner.action_dim())
}

/// # Safety
/// `policy` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tawdi_policy_free(policy: *mut TawdiPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Builds a disturbance from a row-major `dim × dim` covariance.
///
/// # Safety
/// `covariance` must hold `dim * dim` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tawdi_disturbance_new(
    dim: usize,
    covariance: *const f64,
    out: *mut *mut TawdiDisturbance,
) -> TawdiStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let n = dim
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(TawdiStatus::InvalidArgument, "dimension overflows"))?;
        let inner = DisturbanceModel::new(dim, slice(covariance, n, "covariance")?.to_vec())?;
        *out = Box::into_raw(Box::new(TawdiDisturbance { inner }));
        Ok(())
    })
}

/// Writes `trace(Σ)` to `out`.
///
/// # Safety
/// `model` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tawdi_disturbance_level(model: *const TawdiDisturbance, out: *mut f64) -> TawdiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| Failure::null("model"))?;
        *out_ptr(out, "out")? = m.inner.level();
        Ok(())
    })
}

/// Writes `action + ε`, `ε ~ N(0, Σ)`, into `out`. The draw is a pure
/// function of (`seed`, `stream`).
///
/// # Safety
/// `model` must come from this library; `action` and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn tawdi_disturbance_inject(
    model: *const TawdiDisturbance,
    action: *const f64,
    len: usize,
    seed: u64,
    stream: u64,
    out: *mut f64,
) -> TawdiStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| Failure::null("model"))?.inner;
        check_len("action", m.dim(), len)?;
        let a = Action::new(slice(action, len, "action")?.to_vec());
        let disturbed = inject(&a, m, &mut RngStream::new(seed, stream))?;
        slice_mut(out, len, "out")?.copy_from_slice(disturbed.as_slice());
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn tawdi_disturbance_free(model: *mut TawdiDisturbance) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes `exp(-temperature * cost)` to `out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tawdi_optimality_likelihood(cost: f64, temperature: f64, out: *mut f64) -> TawdiStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = WeightingConfig::exponential(temperature);
        cfg.validate()?;
        *out = optimality_likelihood(cost, &cfg)?;
        Ok(())
    })
}

/// Rescales `n` likelihoods so they sum to `n`.
///
/// # Safety
/// `likelihoods` and `out` must hold `n` values; they may alias.
#[no_mangle]
pub unsafe extern "C" fn tawdi_normalize_weights(likelihoods: *const f64, n: usize, out: *mut f64) -> TawdiStatus {
    guard(|| {
        let w = normalize_weights(slice(likelihoods, n, "likelihoods")?)?;
        slice_mut(out, n, "out")?.copy_from_slice(&w);
        Ok(())
    })
}

/// Two-sided Welch t-test of sample `a` against sample `b`.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tawdi_welch_t_test(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut TawdiWelch,
) -> TawdiStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let w = welch_t_test(slice(a, na, "a")?, slice(b, nb, "b")?)?;
        *out = TawdiWelch { t: w.t, df: w.df, p: w.p };
        Ok(())
    })
}

/// Runs the experiment described by a TOML config file and writes every
/// output file into `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn tawdi_run_experiment(config_path: *const c_char, out_dir: *const c_char) -> TawdiStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_path(to_path(config_path, "config_path")?)?;
        let dir = to_path(out_dir, "out_dir")?;
        let runs = run_experiment(&cfg)?;
        write_outputs(&dir, &cfg, &runs)?;
        Ok(())
    })
}
