//! C ABI for the heatnet solver library.
//!
//! Conventions: opaque handles own their data and must be released with the
//! matching `_free` function; every fallible call returns an [`HnStatus`]
//! and leaves a human-readable message retrievable through
//! [`hn_last_error`] (thread-local). Array outputs are caller-allocated with
//! explicit lengths.
//!
//! The generated header lands in `include/heatnet.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use heatnet::cli::config::parse_config;
use heatnet::{floquet_solver, metrics, static_solver, Model};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HnStatus {
    HnOk = 0,
    HnNullArgument = 1,
    HnInvalidUtf8 = 2,
    HnInvalidConfig = 3,
    HnSolverFailure = 4,
    HnUnstable = 5,
    HnBadLength = 6,
    HnNoTransport = 7,
    HnPanic = 8,
}

/// Opaque model handle.
pub struct HnModel {
    inner: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).ok();
    });
}

fn guard<F: FnOnce() -> HnStatus>(f: F) -> HnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            HnStatus::HnPanic
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Last error message for the calling thread, or NULL when no error has
/// been recorded. The pointer stays valid until the next failing call on
/// the same thread.
#[no_mangle]
pub extern "C" fn hn_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Build a model from a JSON document with the same schema as the CLI
/// configuration (the `model` and `baths` sections are required). Returns
/// NULL on error.
///
/// # Safety
/// `json` must be a valid NUL-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn hn_model_from_json(json: *const c_char) -> *mut HnModel {
    if json.is_null() {
        set_error("json argument is NULL");
        return std::ptr::null_mut();
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("json argument is not valid UTF-8");
            return std::ptr::null_mut();
        }
    };
    match parse_config(text, std::iter::empty()).and_then(|cfg| cfg.build_model()) {
        Ok(model) => Box::into_raw(Box::new(HnModel { inner: model })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Release a model handle. NULL is ignored.
///
/// # Safety
/// `model` must be a pointer returned by [`hn_model_from_json`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn hn_model_free(model: *mut HnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of baths of the model, or -1 on NULL.
///
/// # Safety
/// `model` must be a live handle from [`hn_model_from_json`] or NULL.
#[no_mangle]
pub unsafe extern "C" fn hn_model_n_baths(model: *const HnModel) -> i32 {
    if model.is_null() {
        return -1;
    }
    (*model).inner.n_baths() as i32
}

/// Number of network nodes, or -1 on NULL.
///
/// # Safety
/// `model` must be a live handle from [`hn_model_from_json`] or NULL.
#[no_mangle]
pub unsafe extern "C" fn hn_model_n_nodes(model: *const HnModel) -> i32 {
    if model.is_null() {
        return -1;
    }
    (*model).inner.n_nodes() as i32
}

/// Steady-state currents of a static network. `out_heat` receives one value
/// per bath (length `len` must equal the bath count); `out_residual` gets
/// the first-law residual and may be NULL. Pass `rel_tol <= 0` for the
/// default quadrature tolerance.
///
/// # Safety
/// `model` must be a live handle; `out_heat` must point to `len` writable
/// doubles; `out_residual` must be NULL or point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn hn_static_currents(
    model: *const HnModel,
    rel_tol: f64,
    out_heat: *mut f64,
    len: usize,
    out_residual: *mut f64,
) -> HnStatus {
    guard(|| {
        if model.is_null() || out_heat.is_null() {
            set_error("NULL argument");
            return HnStatus::HnNullArgument;
        }
        let m = &(*model).inner;
        if len != m.n_baths() {
            set_error(format!("out_heat length {len} != bath count {}", m.n_baths()));
            return HnStatus::HnBadLength;
        }
        let tol = if rel_tol > 0.0 { rel_tol } else { 1e-7 };
        match static_solver::static_currents_with_tol(m, tol) {
            Ok(report) => {
                for (i, b) in report.baths.iter().enumerate() {
                    *out_heat.add(i) = b.heat;
                }
                if !out_residual.is_null() {
                    *out_residual = report.first_law_residual;
                }
                HnStatus::HnOk
            }
            Err(e) => {
                set_error(e.to_string());
                HnStatus::HnSolverFailure
            }
        }
    })
}

/// Period-averaged currents and work rates of a driven network.
/// `k_order <= 0` selects the default truncation with auto-escalation.
/// `out_heat` and `out_work_local` receive one value per bath; either may
/// be NULL to skip it. `out_work_total` may be NULL.
///
/// # Safety
/// `model` must be a live handle; non-NULL output pointers must reference
/// `len` writable doubles (`out_work_total`: one double).
#[no_mangle]
pub unsafe extern "C" fn hn_averaged_currents(
    model: *const HnModel,
    k_order: i32,
    rel_tol: f64,
    out_heat: *mut f64,
    out_work_local: *mut f64,
    len: usize,
    out_work_total: *mut f64,
) -> HnStatus {
    guard(|| {
        if model.is_null() {
            set_error("NULL model");
            return HnStatus::HnNullArgument;
        }
        let m = &(*model).inner;
        if len != m.n_baths() && (!out_heat.is_null() || !out_work_local.is_null()) {
            set_error(format!("output length {len} != bath count {}", m.n_baths()));
            return HnStatus::HnBadLength;
        }
        let k = (k_order > 0).then_some(k_order);
        let tol = if rel_tol > 0.0 { rel_tol } else { 1e-7 };
        match floquet_solver::averaged_currents_with_tol(m, k, tol) {
            Ok(report) => {
                for (i, b) in report.baths.iter().enumerate() {
                    if !out_heat.is_null() {
                        *out_heat.add(i) = b.heat;
                    }
                    if !out_work_local.is_null() {
                        *out_work_local.add(i) = b.work_local;
                    }
                }
                if !out_work_total.is_null() {
                    *out_work_total = report.work_total;
                }
                HnStatus::HnOk
            }
            Err(e) => {
                set_error(e.to_string());
                match e {
                    static_solver::SolverError::Unstable(_) => HnStatus::HnUnstable,
                    _ => HnStatus::HnSolverFailure,
                }
            }
        }
    })
}

/// Floquet stability heuristic for a driven model. `out_stable` receives 1
/// when both tiers pass, 0 otherwise.
///
/// # Safety
/// `model` must be a live handle; non-NULL output pointers must each
/// reference one writable value.
#[no_mangle]
pub unsafe extern "C" fn hn_stability_check(
    model: *const HnModel,
    out_stable: *mut i32,
    out_worst_multiplier: *mut f64,
    out_worst_condition: *mut f64,
) -> HnStatus {
    guard(|| {
        if model.is_null() {
            set_error("NULL model");
            return HnStatus::HnNullArgument;
        }
        match floquet_solver::stability_check(&(*model).inner) {
            Ok(rep) => {
                if !out_stable.is_null() {
                    *out_stable = rep.is_stable() as i32;
                }
                if !out_worst_multiplier.is_null() {
                    *out_worst_multiplier = rep.worst_multiplier;
                }
                if !out_worst_condition.is_null() {
                    *out_worst_condition = rep.worst_condition;
                }
                HnStatus::HnOk
            }
            Err(e) => {
                set_error(e.to_string());
                HnStatus::HnSolverFailure
            }
        }
    })
}

/// Rectification coefficient R(q_fwd, q_rev) in [0, 2].
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn hn_rectification(q_fwd: f64, q_rev: f64, out: *mut f64) -> HnStatus {
    if out.is_null() {
        set_error("NULL output");
        return HnStatus::HnNullArgument;
    }
    match metrics::rectification(q_fwd, q_rev) {
        Ok(r) => {
            *out = r;
            HnStatus::HnOk
        }
        Err(e) => {
            set_error(e.to_string());
            HnStatus::HnNoTransport
        }
    }
}
