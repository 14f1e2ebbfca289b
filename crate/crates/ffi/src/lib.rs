//! C ABI for phasepredict.
//!
//! Handles are opaque and immutable once created, so they may be shared across threads.
//! Matrices cross the boundary as q×q row-major arrays of interleaved (re, im) doubles, 2q² values each.
//! Every function returns a `PpStatus`; on failure `pp_last_error` describes the error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use phasepredict::config::ModelConfig;
use phasepredict::engine::{Engine, EngineOptions, PredictorSolution};
use phasepredict::error::Error;
use phasepredict::linalg::CMat;
use phasepredict::model::FarimaModel;

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed arguments or configuration (bad d, bad JSON, index out of range).
    InvalidInput = 2,
    /// g violates the admissibility condition (pole or determinant zero in the closed disk).
    NotAdmissible = 3,
    /// A matrix that must be invertible was numerically singular.
    Singular = 4,
    /// An iteration did not converge or a truncation certificate could not be met.
    NonConvergence = 5,
    /// Internal failure, including a caught panic.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PpStatus {
    match e {
        Error::InvalidInput(_) => PpStatus::InvalidInput,
        Error::NotAdmissible(_) | Error::PoleAtPoint(_) => PpStatus::NotAdmissible,
        Error::Singular { .. } => PpStatus::Singular,
        Error::NonConvergence { .. } | Error::Truncation(_) => PpStatus::NonConvergence,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => PpStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (PpStatus, String)>) -> PpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PpStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            PpStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (PpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (PpStatus, String) {
    (PpStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> (PpStatus, String) {
    (PpStatus::InvalidInput, msg)
}

/// A model with its engine settings.
pub struct PpModel {
    model: FarimaModel,
    opts: EngineOptions,
}

/// Predictor solution at one horizon n.
pub struct PpSolution {
    sol: PredictorSolution,
    q: usize,
}

fn write_mat(m: &CMat, out: *mut f64) {
    let q = m.nrows();
    // SAFETY: callers guarantee room for 2q² doubles.
    let dst = unsafe { std::slice::from_raw_parts_mut(out, 2 * q * q) };
    for r in 0..q {
        for c in 0..q {
            let z = m[(r, c)];
            dst[2 * (r * q + c)] = z.re;
            dst[2 * (r * q + c) + 1] = z.im;
        }
    }
}

/// Message of the last failed call on this thread; empty after a success. Valid until the next call.
#[no_mangle]
pub extern "C" fn pp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model from a JSON configuration (fields d, g, and optionally tol, grid, window).
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pp_model_from_json(json: *const c_char, out: *mut *mut PpModel) -> PpStatus {
    guard(|| {
        if json.is_null() {
            return Err(null_err("json"));
        }
        if out.is_null() {
            return Err(null_err("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| invalid(format!("config is not UTF-8: {e}")))?;
        let cfg = ModelConfig::from_json(text).map_err(lib_err)?;
        let model = cfg.build_model().map_err(lib_err)?;
        let handle = Box::new(PpModel {
            model,
            opts: cfg.engine_options(),
        });
        *out = Box::into_raw(handle);
        Ok(())
    })
}

/// Scalar fractional noise with g ≡ 1.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pp_model_fractional_noise(d: f64, out: *mut *mut PpModel) -> PpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let model = FarimaModel::fractional_noise(d).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PpModel {
            model,
            opts: EngineOptions::default(),
        }));
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from a constructor of this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pp_model_free(model: *mut PpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Dimension q of the process.
///
/// # Safety
/// `model` and `q` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pp_model_dim(model: *const PpModel, q: *mut usize) -> PpStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        let q = q.as_mut().ok_or_else(|| null_err("q"))?;
        *q = m.model.q;
        Ok(())
    })
}

/// Innovation covariances v_∞ = c_0c_0* and ṽ_∞ = c̃_0c̃_0*, 2q² doubles each.
///
/// # Safety
/// `model` must be valid; `v_inf` and `v_tilde_inf` must each hold 2q² doubles.
#[no_mangle]
pub unsafe extern "C" fn pp_model_limits(model: *const PpModel, v_inf: *mut f64, v_tilde_inf: *mut f64) -> PpStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        if v_inf.is_null() || v_tilde_inf.is_null() {
            return Err(null_err("output buffer"));
        }
        write_mat(&m.model.v_inf(), v_inf);
        write_mat(&m.model.v_tilde_inf(), v_tilde_inf);
        Ok(())
    })
}

/// Solves the order-n prediction problem. With `with_coeffs` nonzero all φ_{n,j} and φ̃_{n,j} are
/// computed as well; otherwise only v_n, ṽ_n and α_n are available.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pp_predict(
    model: *const PpModel,
    n: usize,
    with_coeffs: i32,
    out: *mut *mut PpSolution,
) -> PpStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let engine = Engine::new(&m.model, m.opts).map_err(lib_err)?;
        let mut sols = engine.sweep(&[n], with_coeffs != 0).map_err(lib_err)?;
        let sol = sols.pop().ok_or_else(|| (PpStatus::Internal, "empty sweep".to_string()))?;
        *out = Box::into_raw(Box::new(PpSolution { sol, q: m.model.q }));
        Ok(())
    })
}

/// α_n for each of the `len` horizons in `ns`, written consecutively into `out` (len·2q² doubles).
///
/// # Safety
/// `model` must be valid, `ns` must hold `len` values and `out` len·2q² doubles.
#[no_mangle]
pub unsafe extern "C" fn pp_pacf(model: *const PpModel, ns: *const usize, len: usize, out: *mut f64) -> PpStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null_err("model"))?;
        if len == 0 {
            return Ok(());
        }
        if ns.is_null() || out.is_null() {
            return Err(null_err("buffer"));
        }
        let ns = std::slice::from_raw_parts(ns, len);
        let engine = Engine::new(&m.model, m.opts).map_err(lib_err)?;
        let sols = engine.sweep(ns, false).map_err(lib_err)?;
        let stride = 2 * m.model.q * m.model.q;
        for (i, s) in sols.iter().enumerate() {
            write_mat(&s.alpha, out.add(i * stride));
        }
        Ok(())
    })
}

/// Releases a solution; null is ignored.
///
/// # Safety
/// `sol` must come from `pp_predict` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pp_solution_free(sol: *mut PpSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Horizon n of the solution.
///
/// # Safety
/// `sol` and `n` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pp_solution_order(sol: *const PpSolution, n: *mut usize) -> PpStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null_err("solution"))?;
        *n.as_mut().ok_or_else(|| null_err("n"))? = s.sol.n;
        Ok(())
    })
}

/// Which matrix `pp_solution_matrix` returns.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpQuantity {
    /// Forward prediction error covariance v_n.
    V = 0,
    /// Backward prediction error covariance ṽ_n.
    VTilde = 1,
    /// PACF α_n.
    Alpha = 2,
    /// φ_{n,j}, j = 1..n.
    Phi = 3,
    /// φ̃_{n,j}, j = 1..n.
    PhiTilde = 4,
    /// Covariance of the forward and backward order-n errors.
    CrossCov = 5,
}

/// Copies one matrix of the solution into `out` (2q² doubles); `j` is used only for φ and φ̃.
///
/// # Safety
/// `sol` must be valid and `out` must hold 2q² doubles.
#[no_mangle]
pub unsafe extern "C" fn pp_solution_matrix(
    sol: *const PpSolution,
    quantity: PpQuantity,
    j: usize,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null_err("solution"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let coeff = |list: &[CMat], name: &str| -> Result<CMat, (PpStatus, String)> {
            if list.is_empty() && s.sol.n > 0 {
                return Err(invalid(format!("{name} not computed; call pp_predict with with_coeffs")));
            }
            if j == 0 || j > list.len() {
                return Err(invalid(format!("{name} index j = {j} outside 1..={}", list.len())));
            }
            Ok(list[j - 1].clone())
        };
        let m = match quantity {
            PpQuantity::V => s.sol.v.clone(),
            PpQuantity::VTilde => s.sol.v_tilde.clone(),
            PpQuantity::Alpha => s.sol.alpha.clone(),
            PpQuantity::CrossCov => s.sol.cross_cov.clone(),
            PpQuantity::Phi => coeff(&s.sol.phi, "phi")?,
            PpQuantity::PhiTilde => coeff(&s.sol.phi_tilde, "phi_tilde")?,
        };
        debug_assert_eq!(m.nrows(), s.q);
        write_mat(&m, out);
        Ok(())
    })
}
