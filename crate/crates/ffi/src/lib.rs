//! C ABI over `momtunnel`.
//!
//! Every entry point returns an [`MtStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`mt_last_error_message`]. Handles are opaque and must be released with
//! their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use momtunnel::app::{self, AppError, RunResult};
use momtunnel::classify::Tag;
use momtunnel::config::RunConfig;
use momtunnel::consistency::AlgebraReport;
use momtunnel::dynamics::{ModelConfig, MomentState, Order};
use momtunnel::integrator::Termination;
use momtunnel::potential::BarrierPotential;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Integration = 4,
    OutOfRange = 5,
    BufferTooSmall = 6,
    AlgebraMismatch = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtTag {
    Reflected = 0,
    Tunneled = 1,
    Trapped = 2,
    Undetermined = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtTermination {
    ReachedTmax = 0,
    Escaped = 1,
    ConstraintViolated = 2,
    StepFailure = 3,
}

/// Model parameters and truncation order.
pub struct MtModel(ModelConfig);

/// An integrated and classified run.
pub struct MtRun(RunResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

type Failure = (MtStatus, String);

fn fail<T>(status: MtStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err((status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MtStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (MtStatus::Ok, String::new()),
        Ok(Err(e)) => e,
        Err(_) => (MtStatus::Panic, "internal panic".to_string()),
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

fn invalid(e: momtunnel::Error) -> Failure {
    (MtStatus::InvalidArgument, e.to_string())
}

fn from_app(e: AppError) -> Failure {
    let status = match e {
        AppError::Config(_) | AppError::Io(_) => MtStatus::Config,
        AppError::Integration(_) => MtStatus::Integration,
        AppError::Golden(_) => MtStatus::AlgebraMismatch,
    };
    (status, e.to_string())
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(MtStatus::NullPointer, format!("{name} is null")), Ok)
}

unsafe fn write<T>(p: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return fail(MtStatus::NullPointer, format!("{name} is null"));
    }
    p.write(value);
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return fail(MtStatus::NullPointer, format!("{name} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return fail(MtStatus::NullPointer, format!("{name} is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn state(model: &ModelConfig, y: &[f64]) -> Result<MomentState, Failure> {
    let dim = model.order().dim();
    if y.len() != dim {
        return fail(
            MtStatus::InvalidArgument,
            format!("state has {} entries, expected {dim}", y.len()),
        );
    }
    Ok(MomentState::from_slice(0.0, model.order(), y))
}

/// Length in bytes of the last error message, excluding the terminator.
#[no_mangle]
pub extern "C" fn mt_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message of this thread into `buf` as a
/// NUL-terminated string.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mt_last_error_message(buf: *mut c_char, len: usize) -> MtStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    if buf.is_null() {
        return MtStatus::NullPointer;
    }
    if len < msg.len() + 1 {
        return MtStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), msg.len());
    *buf.add(msg.len()) = 0;
    MtStatus::Ok
}

/// Creates a model. `order` is 0, 2 or 3.
///
/// # Safety
/// `out` must be a valid pointer; on success it receives a handle owned by
/// the caller.
#[no_mangle]
pub unsafe extern "C" fn mt_model_new(
    mass: f64,
    hbar: f64,
    alpha: f64,
    width: f64,
    exponent: u32,
    order: u32,
    out: *mut *mut MtModel,
) -> MtStatus {
    guard(|| {
        let order = Order::try_from(order).map_err(|e| (MtStatus::InvalidArgument, e.to_string()))?;
        let pot = BarrierPotential::new(alpha, width, exponent).map_err(invalid)?;
        let model = ModelConfig::new(mass, hbar, pot, order).map_err(invalid)?;
        write(out, Box::into_raw(Box::new(MtModel(model))), "out")
    })
}

/// Releases a model handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`mt_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mt_model_free(model: *mut MtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of packed state entries: 2, 5 or 9.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_dim(model: *const MtModel, out: *mut usize) -> MtStatus {
    guard(|| write(out, deref(model, "model")?.0.order().dim(), "out"))
}

/// Time derivative of the packed state `[q, p, G20, G11, G02, ...]`.
///
/// # Safety
/// `y` and `dy` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mt_model_rhs(model: *const MtModel, y: *const f64, dy: *mut f64, len: usize) -> MtStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let y = slice(y, len, "y")?;
        state(m, y)?;
        m.rhs_packed(y, slice_mut(dy, len, "dy")?);
        Ok(())
    })
}

/// Effective Hamiltonian of a packed state.
///
/// # Safety
/// `y` must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_hamiltonian(
    model: *const MtModel,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> MtStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let s = state(m, slice(y, len, "y")?)?;
        write(out, m.effective_hamiltonian(&s), "out")
    })
}

/// Effective potential at `q` with the moments of `y` held fixed.
///
/// # Safety
/// `y` must hold `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_effective_potential(
    model: *const MtModel,
    q: f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> MtStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let s = state(m, slice(y, len, "y")?)?;
        write(out, m.effective_potential(q, &s), "out")
    })
}

/// `k`-th derivative of the barrier at `q`, `k <= 8`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_potential_derivative(
    model: *const MtModel,
    q: f64,
    k: u32,
    out: *mut f64,
) -> MtStatus {
    guard(|| {
        let m = &deref(model, "model")?.0;
        let v = m
            .potential()
            .derivative(q, k as usize)
            .map_err(|e| (MtStatus::OutOfRange, e.to_string()))?;
        write(out, v, "out")
    })
}

/// Runs and classifies the simulation described by a TOML configuration.
///
/// # Safety
/// `config` must be a NUL-terminated UTF-8 string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_run_from_toml(config: *const c_char, out: *mut *mut MtRun) -> MtStatus {
    guard(|| {
        if config.is_null() {
            return fail(MtStatus::NullPointer, "config is null");
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| (MtStatus::InvalidArgument, e.to_string()))?;
        let cfg = RunConfig::from_toml(text).map_err(|e| (MtStatus::Config, e))?;
        let result = app::simulate(&cfg).map_err(from_app)?;
        write(out, Box::into_raw(Box::new(MtRun(result))), "out")
    })
}

/// Releases a run handle. Null is ignored.
///
/// # Safety
/// `run` must come from [`mt_run_from_toml`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mt_run_free(run: *mut MtRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of stored samples.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_run_len(run: *const MtRun, out: *mut usize) -> MtStatus {
    guard(|| write(out, deref(run, "run")?.0.trajectory.samples.len(), "out"))
}

/// Number of packed state entries per sample.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_run_dim(run: *const MtRun, out: *mut usize) -> MtStatus {
    guard(|| write(out, deref(run, "run")?.0.trajectory.model.order().dim(), "out"))
}

/// Copies sample `index`: its time into `t` and its packed state into `y`.
///
/// # Safety
/// `y` must hold `len` doubles, at least the run's dimension.
#[no_mangle]
pub unsafe extern "C" fn mt_run_sample(
    run: *const MtRun,
    index: usize,
    t: *mut f64,
    y: *mut f64,
    len: usize,
) -> MtStatus {
    guard(|| {
        let samples = &deref(run, "run")?.0.trajectory.samples;
        let Some(s) = samples.get(index) else {
            return fail(MtStatus::OutOfRange, format!("sample {index} of {}", samples.len()));
        };
        let v = s.state.to_vec();
        if len < v.len() {
            return fail(MtStatus::BufferTooSmall, format!("need {} entries", v.len()));
        }
        slice_mut(y, len, "y")?[..v.len()].copy_from_slice(&v);
        write(t, s.state.t, "t")
    })
}

/// Classification of the run.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_run_tag(run: *const MtRun, out: *mut MtTag) -> MtStatus {
    guard(|| {
        let tag = match deref(run, "run")?.0.outcome.tag {
            Tag::Reflected => MtTag::Reflected,
            Tag::Tunneled => MtTag::Tunneled,
            Tag::Trapped => MtTag::Trapped,
            Tag::Undetermined => MtTag::Undetermined,
        };
        write(out, tag, "out")
    })
}

/// Why integration stopped.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_run_termination(run: *const MtRun, out: *mut MtTermination) -> MtStatus {
    guard(|| {
        let term = match deref(run, "run")?.0.trajectory.termination {
            Termination::ReachedTmax => MtTermination::ReachedTmax,
            Termination::Escaped => MtTermination::Escaped,
            Termination::ConstraintViolated => MtTermination::ConstraintViolated,
            Termination::StepFailure => MtTermination::StepFailure,
        };
        write(out, term, "out")
    })
}

/// Largest relative deviation of the effective Hamiltonian from its start value.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mt_run_energy_drift(run: *const MtRun, out: *mut f64) -> MtStatus {
    guard(|| write(out, deref(run, "run")?.0.trajectory.energy_drift(), "out"))
}

/// Checks the built-in equation tables against the moment algebra.
/// Returns `MT_STATUS_ALGEBRA_MISMATCH` on an unrecorded difference.
#[no_mangle]
pub extern "C" fn mt_check_algebra() -> MtStatus {
    guard(|| {
        if AlgebraReport::builtin().matches_golden() {
            Ok(())
        } else {
            fail(
                MtStatus::AlgebraMismatch,
                "equation tables differ from the derived equations",
            )
        }
    })
}
