//! C ABI over the core library.
//!
//! Conventions:
//! - systems are opaque handles created by `nh_system_disk_new` /
//!   `nh_system_from_config` and released with `nh_system_free`;
//! - every fallible call returns an [`NhStatus`] code and leaves a
//!   human-readable message retrievable via `nh_last_error`;
//! - arrays are caller-allocated `double` buffers whose length is the
//!   system dimension (`nh_system_dim`), and trajectories are flattened
//!   rows `[t, q[0..n], v[0..n]]`.
//!
//! The installed header lives at `include/nonholo.h`. It is maintained by
//! hand (kept in lockstep by the smoke tests) because the build
//! environment has no header generator; change signatures in both places.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nonholo::dynamics::{self, Model, SimPlan, State};
use nonholo::systems::{disk_system, DiskParams, SystemDef};
use nonholo::{constraints, slow_manifold, Error, Vector};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhStatus {
    NhOk = 0,
    NhBadArgument = 1,
    NhInvalidParams = 2,
    NhSingularMetric = 3,
    NhRankDeficient = 4,
    NhIllConditioned = 5,
    NhUnsupportedOrder = 6,
    NhStepTooLarge = 7,
    NhNonFinite = 8,
    NhSchema = 9,
    NhBufferTooSmall = 10,
    NhInternal = 11,
}

/// Model selector mirroring the CLI names.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NhModel {
    NhModelFull = 0,
    NhModelZeroth = 1,
    NhModelFirst = 2,
}

impl NhModel {
    fn to_model(self) -> Model {
        match self {
            NhModel::NhModelFull => Model::Full,
            NhModel::NhModelZeroth => Model::Zeroth,
            NhModel::NhModelFirst => Model::First,
        }
    }
}

/// Opaque system handle.
pub struct NhSystem {
    inner: SystemDef,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|c| *c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> NhStatus {
    match err {
        Error::SingularMetric => NhStatus::NhSingularMetric,
        Error::DimensionMismatch { .. } => NhStatus::NhBadArgument,
        Error::RankDeficientConstraints => NhStatus::NhRankDeficient,
        Error::IllConditionedFrame { .. } | Error::QMapConstruction { .. } => {
            NhStatus::NhIllConditioned
        }
        Error::UnsupportedOrder { .. } => NhStatus::NhUnsupportedOrder,
        Error::StepTooLargeForStiffness { .. } => NhStatus::NhStepTooLarge,
        Error::NonFiniteState { .. } => NhStatus::NhNonFinite,
        Error::InvalidParams(_) => NhStatus::NhInvalidParams,
        Error::Schema { .. } => NhStatus::NhSchema,
        Error::Io(_) => NhStatus::NhInternal,
    }
}

fn fail(err: Error) -> NhStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Run a closure, translating errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<NhStatus, Error>) -> NhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(err)) => fail(err),
        Err(_) => {
            set_error("internal panic");
            NhStatus::NhInternal
        }
    }
}

unsafe fn system_ref<'a>(handle: *const NhSystem) -> Option<&'a SystemDef> {
    handle.as_ref().map(|h| &h.inner)
}

unsafe fn slice_in<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn slice_out<'a>(ptr: *mut f64, len: usize) -> Option<&'a mut [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts_mut(ptr, len))
    }
}

fn bad(msg: &str) -> NhStatus {
    set_error(msg);
    NhStatus::NhBadArgument
}

/// Copy the last error message into `buf` (truncated, always NUL-terminated).
/// Returns the full message length (excluding the terminator).
/// # Safety
/// `buf` must point to `len` writable bytes (or be null).
#[no_mangle]
pub unsafe extern "C" fn nh_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Create a vertical rolling disk system.
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn nh_system_disk_new(
    mass: f64,
    inertia_plane: f64,
    inertia_roll: f64,
    radius: f64,
    mu: f64,
    epsilon: f64,
    out: *mut *mut NhSystem,
) -> NhStatus {
    guarded(|| {
        if out.is_null() {
            return Ok(bad("out pointer is null"));
        }
        let sys = disk_system(DiskParams {
            mass,
            inertia_plane,
            inertia_roll,
            radius,
            mu,
            epsilon,
        })?;
        *out = Box::into_raw(Box::new(NhSystem { inner: sys }));
        Ok(NhStatus::NhOk)
    })
}

/// Create a system from a TOML configuration string (the same schema the
/// CLI consumes; `system.*` and `sim.epsilon` are read).
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn nh_system_from_config(
    text: *const c_char,
    out: *mut *mut NhSystem,
) -> NhStatus {
    guarded(|| {
        if text.is_null() || out.is_null() {
            return Ok(bad("null pointer argument"));
        }
        let text = match CStr::from_ptr(text).to_str() {
            Ok(t) => t,
            Err(_) => return Ok(bad("config text is not valid UTF-8")),
        };
        let sys = nonholo::systems::load_system_str(text)?;
        *out = Box::into_raw(Box::new(NhSystem { inner: sys }));
        Ok(NhStatus::NhOk)
    })
}

/// Release a system handle (null is a no-op).
/// # Safety
/// `handle` must be null or a pointer returned by a constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nh_system_free(handle: *mut NhSystem) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Configuration-space dimension (0 for a null handle).
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nh_system_dim(handle: *const NhSystem) -> u32 {
    system_ref(handle).map_or(0, |s| s.dim as u32)
}

/// Time-scale ratio of the system (NaN for a null handle).
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nh_system_epsilon(handle: *const NhSystem) -> f64 {
    system_ref(handle).map_or(f64::NAN, |s| s.epsilon())
}

/// Replace the time-scale ratio.
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nh_system_set_epsilon(handle: *mut NhSystem, epsilon: f64) -> NhStatus {
    guarded(|| {
        let h = match handle.as_mut() {
            Some(h) => h,
            None => return Ok(bad("system handle is null")),
        };
        h.inner = h.inner.with_epsilon(epsilon)?;
        Ok(NhStatus::NhOk)
    })
}

/// Truncated slip `sum_{k<=order} eps^k h_k` at `(q, v)`; writes `dim`
/// doubles. The velocity may be ambient; it is projected internally.
/// # Safety
/// Array arguments must be null or point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn nh_slip(
    handle: *const NhSystem,
    q: *const f64,
    v: *const f64,
    order: u32,
    out: *mut f64,
) -> NhStatus {
    guarded(|| {
        let sys = match system_ref(handle) {
            Some(s) => s,
            None => return Ok(bad("system handle is null")),
        };
        let n = sys.dim;
        let (q, v, out) = match (slice_in(q, n), slice_in(v, n), slice_out(out, n)) {
            (Some(q), Some(v), Some(out)) => (q, v, out),
            _ => return Ok(bad("null array argument")),
        };
        let qv = Vector::from_column_slice(q);
        let vv = Vector::from_column_slice(v);
        let s = slow_manifold::slip(sys, &qv, &vv, order as usize)?;
        out.copy_from_slice(s.as_slice());
        Ok(NhStatus::NhOk)
    })
}

/// Ideal constraint reaction force (Lagrange multiplier) at `(q, v)`.
/// # Safety
/// Array arguments must be null or point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn nh_lagrange_multiplier(
    handle: *const NhSystem,
    q: *const f64,
    v: *const f64,
    out: *mut f64,
) -> NhStatus {
    guarded(|| {
        let sys = match system_ref(handle) {
            Some(s) => s,
            None => return Ok(bad("system handle is null")),
        };
        let n = sys.dim;
        let (q, v, out) = match (slice_in(q, n), slice_in(v, n), slice_out(out, n)) {
            (Some(q), Some(v), Some(out)) => (q, v, out),
            _ => return Ok(bad("null array argument")),
        };
        let lambda = constraints::lagrange_multiplier(
            sys,
            &Vector::from_column_slice(q),
            &Vector::from_column_slice(v),
        )?;
        out.copy_from_slice(lambda.as_slice());
        Ok(NhStatus::NhOk)
    })
}

/// Right-hand side of the selected model at `(q, v)`.
/// # Safety
/// Array arguments must be null or point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn nh_rhs(
    handle: *const NhSystem,
    model: NhModel,
    q: *const f64,
    v: *const f64,
    out_dq: *mut f64,
    out_dv: *mut f64,
) -> NhStatus {
    guarded(|| {
        let sys = match system_ref(handle) {
            Some(s) => s,
            None => return Ok(bad("system handle is null")),
        };
        let n = sys.dim;
        let (q, v) = match (slice_in(q, n), slice_in(v, n)) {
            (Some(q), Some(v)) => (q, v),
            _ => return Ok(bad("null array argument")),
        };
        let (out_dq, out_dv) = match (slice_out(out_dq, n), slice_out(out_dv, n)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(bad("null output argument")),
        };
        let state = State::new(
            0.0,
            Vector::from_column_slice(q),
            Vector::from_column_slice(v),
        );
        let rhs = dynamics::model_rhs(sys, model.to_model());
        let (dq, dv) = rhs(&state)?;
        out_dq.copy_from_slice(dq.as_slice());
        out_dv.copy_from_slice(dv.as_slice());
        Ok(NhStatus::NhOk)
    })
}

/// Kinetic energy at `(q, v)`.
/// # Safety
/// Array arguments must be null or point to `dim` doubles; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn nh_kinetic_energy(
    handle: *const NhSystem,
    q: *const f64,
    v: *const f64,
    out: *mut f64,
) -> NhStatus {
    guarded(|| {
        let sys = match system_ref(handle) {
            Some(s) => s,
            None => return Ok(bad("system handle is null")),
        };
        let n = sys.dim;
        match (slice_in(q, n), slice_in(v, n), out.as_mut()) {
            (Some(q), Some(v), Some(out)) => {
                *out = dynamics::kinetic_energy(
                    sys,
                    &Vector::from_column_slice(q),
                    &Vector::from_column_slice(v),
                );
                Ok(NhStatus::NhOk)
            }
            _ => Ok(bad("null argument")),
        }
    })
}

/// Energy loss rate to friction at `(q, v)` (non-positive).
/// # Safety
/// Array arguments must be null or point to `dim` doubles; `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn nh_dissipation_rate(
    handle: *const NhSystem,
    q: *const f64,
    v: *const f64,
    out: *mut f64,
) -> NhStatus {
    guarded(|| {
        let sys = match system_ref(handle) {
            Some(s) => s,
            None => return Ok(bad("system handle is null")),
        };
        let n = sys.dim;
        match (slice_in(q, n), slice_in(v, n), out.as_mut()) {
            (Some(q), Some(v), Some(out)) => {
                *out = dynamics::dissipation_rate(
                    sys,
                    &Vector::from_column_slice(q),
                    &Vector::from_column_slice(v),
                )?;
                Ok(NhStatus::NhOk)
            }
            _ => Ok(bad("null argument")),
        }
    })
}

/// Upper bound on the number of recorded rows for the given stepping.
#[no_mangle]
pub extern "C" fn nh_trajectory_capacity(dt: f64, t_final: f64, record_every: u32) -> usize {
    if dt.is_nan() || dt <= 0.0 || t_final < 0.0 || record_every == 0 {
        return 0;
    }
    let steps = (t_final / dt).floor() as usize;
    steps / record_every as usize + 2
}

/// Integrate the selected model with fixed-step RK4.
///
/// Rows are `[t, q[0..n], v[0..n]]` (stride `1 + 2n`) written to
/// `out_rows`; `max_rows` is the row capacity (see
/// [`nh_trajectory_capacity`]) and `*rows_written` receives the count.
/// The full model enforces `dt <= epsilon / 20`.
/// # Safety
/// `q0`/`v0` must point to `dim` doubles, `out_rows` to `max_rows * (1 + 2 dim)`
/// doubles, and `rows_written` to one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn nh_simulate(
    handle: *const NhSystem,
    model: NhModel,
    q0: *const f64,
    v0: *const f64,
    dt: f64,
    t_final: f64,
    record_every: u32,
    out_rows: *mut f64,
    max_rows: usize,
    rows_written: *mut usize,
) -> NhStatus {
    guarded(|| {
        let sys = match system_ref(handle) {
            Some(s) => s,
            None => return Ok(bad("system handle is null")),
        };
        let n = sys.dim;
        let (q0, v0) = match (slice_in(q0, n), slice_in(v0, n)) {
            (Some(q), Some(v)) => (q, v),
            _ => return Ok(bad("null array argument")),
        };
        if rows_written.is_null() {
            return Ok(bad("rows_written is null"));
        }
        let plan = SimPlan {
            model: model.to_model(),
            dt,
            t_final,
            epsilon: sys.epsilon(),
            record_every: record_every.max(1) as usize,
            transient_skip: 0.0,
        };
        let rhs = dynamics::model_rhs(sys, model.to_model());
        let state0 = State::new(
            0.0,
            Vector::from_column_slice(q0),
            Vector::from_column_slice(v0),
        );
        let traj = dynamics::integrate(&rhs, &state0, &plan)?;
        if traj.len() > max_rows {
            set_error("trajectory buffer too small");
            return Ok(NhStatus::NhBufferTooSmall);
        }
        let stride = 1 + 2 * n;
        let out = match slice_out(out_rows, max_rows * stride) {
            Some(o) => o,
            None => return Ok(bad("out_rows is null")),
        };
        for (i, s) in traj.iter().enumerate() {
            let row = &mut out[i * stride..(i + 1) * stride];
            row[0] = s.t;
            row[1..1 + n].copy_from_slice(s.q.as_slice());
            row[1 + n..].copy_from_slice(s.v.as_slice());
        }
        *rows_written = traj.len();
        Ok(NhStatus::NhOk)
    })
}
