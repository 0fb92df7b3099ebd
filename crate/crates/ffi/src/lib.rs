//! C interface to `qssa-lab`.
//!
//! Objects are opaque handles created by `ql_*_new`-style calls and released
//! with the matching `ql_*_free`. Every fallible call returns a [`QlStatus`];
//! on failure the message is kept per thread and can be read with
//! [`ql_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qssa_lab::diagnostics::{self, Verdict};
use qssa_lab::error::Error;
use qssa_lab::integrate::{self, IntegratorConfig, Trajectory};
use qssa_lab::manifold::{self, ManifoldCurve};
use qssa_lab::model::{self, EquilibriumKind, RateParameters, State};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidInput = 3,
    Parse = 4,
    /// Integration, iteration or root finding failed.
    Numerical = 5,
    /// Parameters outside the regime the call needs.
    Degenerate = 6,
    OutOfRange = 7,
    Panic = 8,
}

impl From<&Error> for QlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) => QlStatus::InvalidParameter,
            Error::InvalidInput(_) | Error::Io(_) => QlStatus::InvalidInput,
            Error::Parse(_) => QlStatus::Parse,
            Error::DegenerateFamily(_) => QlStatus::Degenerate,
            _ => QlStatus::Numerical,
        }
    }
}

/// Rate parameters `(k0, eT, k1, km1, k2)`.
pub struct QlParams(RateParameters);

/// Sampled solution `(t, s, c)` of the planar model.
pub struct QlTrajectory(Trajectory<2>);

/// Slow manifold `c = C(s)` on a grid.
pub struct QlManifold {
    curve: ManifoldCurve,
    converged: bool,
}

/// Finite stationary point. `kind` is one of the `QL_EQ_*` values; `s` and
/// `c` are NaN when there is no point.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QlEquilibrium {
    pub s: f64,
    pub c: f64,
    pub kind: i32,
}

pub const QL_EQ_ATTRACTING_NODE: i32 = 0;
pub const QL_EQ_ATTRACTING_ORIGIN: i32 = 1;
pub const QL_EQ_SADDLE: i32 = 2;
pub const QL_EQ_AT_INFINITY: i32 = 3;
pub const QL_EQ_NONE: i32 = 4;
pub const QL_EQ_DEGENERATE: i32 = 5;

pub const QL_VERDICT_USE_DELTA_M: i32 = 0;
pub const QL_VERDICT_USE_DELTA_0: i32 = 1;
pub const QL_VERDICT_INFLOW_EXCEEDS_CAPACITY: i32 = 2;

/// Small parameters and validity diagnostics. `delta_m` is NaN when
/// `k0 >= k2 eT`; `verdict` is one of the `QL_VERDICT_*` values.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QlDiagnostics {
    pub eps_c: f64,
    pub tau0: f64,
    pub eps_star: f64,
    pub eps_o: f64,
    pub alpha: f64,
    pub delta0: f64,
    pub delta_m: f64,
    pub verdict: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

/// Run `f`, recording failures and turning panics into [`QlStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), (QlStatus, String)>) -> QlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside qssa-lab".into());
            QlStatus::Panic
        }
    }
}

fn lib(e: Error) -> (QlStatus, String) {
    (QlStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (QlStatus, String) {
    (QlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (QlStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and return the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ql_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ql_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validate and store rate parameters.
///
/// # Safety
/// `out` must be a valid pointer to a `QlParams *`.
#[no_mangle]
pub unsafe extern "C" fn ql_params_new(k0: f64, e_t: f64, k1: f64, km1: f64, k2: f64, out: *mut *mut QlParams) -> QlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = RateParameters::new(k0, e_t, k1, km1, k2).map_err(lib)?;
        *out = Box::into_raw(Box::new(QlParams(p)));
        Ok(())
    })
}

/// Parse parameters from the flat JSON object `{"k0", "eT", "k1", "km1", "k2"}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_params_from_json(json: *const c_char, out: *mut *mut QlParams) -> QlStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (QlStatus::Parse, format!("json is not UTF-8: {e}")))?;
        let p = RateParameters::from_json(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(QlParams(p)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from `ql_params_new`/`ql_params_from_json`
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ql_params_free(p: *mut QlParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live parameter handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_equilibrium(p: *const QlParams, out: *mut QlEquilibrium) -> QlStatus {
    guard(|| {
        let p = deref(p, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let eq = model::equilibrium(&p.0).map_err(lib)?;
        let kind = match eq.kind {
            EquilibriumKind::AttractingNodeFirstQuadrant => QL_EQ_ATTRACTING_NODE,
            EquilibriumKind::AttractingNodeAtOrigin => QL_EQ_ATTRACTING_ORIGIN,
            EquilibriumKind::SaddleSecondQuadrant => QL_EQ_SADDLE,
            EquilibriumKind::NoneAtInfinityBalance => QL_EQ_AT_INFINITY,
            EquilibriumKind::NoStationaryPoint => QL_EQ_NONE,
            EquilibriumKind::DegenerateFamily => QL_EQ_DEGENERATE,
        };
        let x = eq.point.unwrap_or(State::new(f64::NAN, f64::NAN));
        *out = QlEquilibrium { s: x.s, c: x.c, kind };
        Ok(())
    })
}

/// # Safety
/// `p` must be a live parameter handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_diagnostics(p: *const QlParams, out: *mut QlDiagnostics) -> QlStatus {
    guard(|| {
        let p = deref(p, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let d = diagnostics::qssa_diagnostics(&p.0).map_err(lib)?;
        *out = QlDiagnostics {
            eps_c: d.eps_c,
            tau0: d.tau0,
            eps_star: d.eps_star,
            eps_o: d.eps_o,
            alpha: d.alpha,
            delta0: d.delta0,
            delta_m: d.delta_m.unwrap_or(f64::NAN),
            verdict: match d.verdict {
                Verdict::UseDeltaM => QL_VERDICT_USE_DELTA_M,
                Verdict::UseDelta0 => QL_VERDICT_USE_DELTA_0,
                Verdict::InflowExceedsCapacity => QL_VERDICT_INFLOW_EXCEEDS_CAPACITY,
            },
        };
        Ok(())
    })
}

/// Integrate from `(s0, c0)` over `[0, t_end]` with the given tolerances.
/// An incomplete run (step budget or step-size underflow) is an error.
///
/// # Safety
/// `p` must be a live parameter handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_simulate(
    p: *const QlParams,
    s0: f64,
    c0: f64,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
    out: *mut *mut QlTrajectory,
) -> QlStatus {
    guard(|| {
        let p = deref(p, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(t_end > 0.0 && t_end.is_finite() && s0 >= 0.0 && c0 >= 0.0) {
            return Err((QlStatus::InvalidInput, format!("need t_end > 0 and s0, c0 >= 0 (got {t_end}, {s0}, {c0})")));
        }
        let cfg = IntegratorConfig::with_tolerances(rel_tol, abs_tol);
        cfg.validate().map_err(lib)?;
        let tr = integrate::simulate(&p.0, State::new(s0, c0), t_end, &cfg, None)
            .and_then(Trajectory::require_complete)
            .map_err(lib)?;
        *out = Box::into_raw(Box::new(QlTrajectory(tr)));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `tr` must be null or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn ql_trajectory_len(tr: *const QlTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.0.len())
}

/// Sample `i` as `(t, s, c)`.
///
/// # Safety
/// `tr` must be a live trajectory handle; `t`, `s`, `c` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ql_trajectory_get(tr: *const QlTrajectory, i: usize, t: *mut f64, s: *mut f64, c: *mut f64) -> QlStatus {
    guard(|| {
        let tr = &deref(tr, "trajectory")?.0;
        if t.is_null() || s.is_null() || c.is_null() {
            return Err(null("output pointer"));
        }
        if i >= tr.len() {
            return Err((QlStatus::OutOfRange, format!("index {i} out of range (len {})", tr.len())));
        }
        *t = tr.times[i];
        *s = tr.states[i][0];
        *c = tr.states[i][1];
        Ok(())
    })
}

/// # Safety
/// `tr` must be null or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn ql_trajectory_free(tr: *mut QlTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Slow manifold on `n_points` equally spaced points of `[0, s_max]`.
///
/// # Safety
/// `p` must be a live parameter handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ql_slow_manifold(
    p: *const QlParams,
    s_max: f64,
    n_points: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut QlManifold,
) -> QlStatus {
    guard(|| {
        let p = deref(p, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = manifold::uniform_grid(s_max, n_points).map_err(lib)?;
        let (curve, report) = manifold::slow_manifold(&p.0, &grid, tol, max_iter).map_err(lib)?;
        *out = Box::into_raw(Box::new(QlManifold { curve, converged: report.converged }));
        Ok(())
    })
}

/// Number of grid points. Can be smaller than requested when the curve
/// ends at a fold below the s-axis. 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live manifold handle.
#[no_mangle]
pub unsafe extern "C" fn ql_manifold_len(m: *const QlManifold) -> usize {
    m.as_ref().map_or(0, |m| m.curve.len())
}

/// Whether the iteration met its tolerance; false for a null handle.
///
/// # Safety
/// `m` must be null or a live manifold handle.
#[no_mangle]
pub unsafe extern "C" fn ql_manifold_converged(m: *const QlManifold) -> bool {
    m.as_ref().is_some_and(|m| m.converged)
}

/// Point `i` as `(s, c, dc/ds)`.
///
/// # Safety
/// `m` must be a live manifold handle; `s`, `c`, `slope` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ql_manifold_get(m: *const QlManifold, i: usize, s: *mut f64, c: *mut f64, slope: *mut f64) -> QlStatus {
    guard(|| {
        let m = &deref(m, "manifold")?.curve;
        if s.is_null() || c.is_null() || slope.is_null() {
            return Err(null("output pointer"));
        }
        if i >= m.len() {
            return Err((QlStatus::OutOfRange, format!("index {i} out of range (len {})", m.len())));
        }
        *s = m.grid[i];
        *c = m.c_values[i];
        *slope = m.dc_ds[i];
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live manifold handle.
#[no_mangle]
pub unsafe extern "C" fn ql_manifold_free(m: *mut QlManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
