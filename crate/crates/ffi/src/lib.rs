//! C interface: opaque function handles, min-norm points, sampled
//! stationarity certificates and whole experiments returning JSON.
//!
//! Every entry point returns an [`NsStatus`]; on failure the message is
//! available from [`ns_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nearstat::harness::config::ExperimentConfig;
use nearstat::harness::run_experiment;
use nearstat::rng::{role, RngStream};
use nearstat::stationarity::{certify_delta_eps, min_norm_point, Sampling, WOLFE_TOL};
use nearstat::zoo::InstanceSpec;
use nearstat::{Error, Function, Vector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Degenerate = 4,
    Numerical = 5,
    Internal = 6,
}

/// Opaque handle to a built function.
pub struct NsFunction {
    inner: Box<dyn Function>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NsStatus {
    match e {
        Error::DimensionMismatch { .. } => NsStatus::DimensionMismatch,
        Error::Degenerate(_) | Error::NoOrthogonalDirection { .. } => NsStatus::Degenerate,
        Error::NonFinite(_) | Error::NotConverged { .. } => NsStatus::Numerical,
        Error::Oracle { source, .. } => status_of(source),
        Error::Io(_) => NsStatus::Internal,
        _ => NsStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), NsStatusError>) -> NsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NsStatus::Ok,
        Ok(Err(NsStatusError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NsStatus::Internal
        }
    }
}

struct NsStatusError(NsStatus, String);

impl From<Error> for NsStatusError {
    fn from(e: Error) -> Self {
        NsStatusError(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> NsStatusError {
    NsStatusError(NsStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, NsStatusError> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| NsStatusError(NsStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], NsStatusError> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Builds a function from an instance JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer. The
/// handle written to `out` must be released with [`ns_function_free`].
#[no_mangle]
pub unsafe extern "C" fn ns_function_from_json(json: *const c_char, out: *mut *mut NsFunction) -> NsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = InstanceSpec::from_json(c_str(json, "json")?)?;
        let inner = spec.build()?;
        *out = Box::into_raw(Box::new(NsFunction { inner }));
        Ok(())
    })
}

/// # Safety
/// `f` must come from [`ns_function_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ns_function_free(f: *mut NsFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a live handle and `out_dim` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ns_function_dim(f: *const NsFunction, out_dim: *mut usize) -> NsStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("f"))?;
        let out = out_dim.as_mut().ok_or_else(|| null("out_dim"))?;
        *out = f.inner.dim();
        Ok(())
    })
}

/// Value and one Clarke subgradient at `x` (length `n`). `out_grad` holds
/// `n` doubles; `out_differentiable` may be null.
///
/// # Safety
/// All non-null pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn ns_function_eval(
    f: *const NsFunction,
    x: *const f64,
    n: usize,
    out_value: *mut f64,
    out_grad: *mut f64,
    out_differentiable: *mut bool,
) -> NsStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("f"))?;
        let x = Vector::new(slice(x, n, "x")?.to_vec())?;
        if out_value.is_null() {
            return Err(null("out_value"));
        }
        if out_grad.is_null() {
            return Err(null("out_grad"));
        }
        let r = f.inner.eval(&x)?;
        *out_value = r.value;
        ptr::copy_nonoverlapping(r.subgrad.as_slice().as_ptr(), out_grad, n);
        if !out_differentiable.is_null() {
            *out_differentiable = r.differentiable;
        }
        Ok(())
    })
}

/// Minimum-norm point of the convex hull of `m` points of dimension `n`
/// stored row-major in `points`. `out_point` holds `n` doubles;
/// `out_coefficients` (`m` doubles, duplicates weighted zero) and
/// `out_norm` may be null.
///
/// # Safety
/// All non-null pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn ns_min_norm_point(
    points: *const f64,
    m: usize,
    n: usize,
    out_point: *mut f64,
    out_coefficients: *mut f64,
    out_norm: *mut f64,
) -> NsStatus {
    guard(|| {
        if m == 0 || n == 0 {
            return Err(NsStatusError(NsStatus::InvalidArgument, "empty point set".into()));
        }
        let len = m.checked_mul(n).ok_or_else(|| NsStatusError(NsStatus::InvalidArgument, "size overflow".into()))?;
        let data = slice(points, len, "points")?;
        if out_point.is_null() {
            return Err(null("out_point"));
        }
        let pts: Vec<Vector> = data.chunks(n).map(|c| Vector::new(c.to_vec())).collect::<Result<_, _>>()?;
        let r = min_norm_point(&pts, WOLFE_TOL)?;
        ptr::copy_nonoverlapping(r.point.as_slice().as_ptr(), out_point, n);
        if !out_coefficients.is_null() {
            ptr::copy_nonoverlapping(r.coefficients.as_ptr(), out_coefficients, m);
        }
        if !out_norm.is_null() {
            *out_norm = r.norm;
        }
        Ok(())
    })
}

/// Samples `samples` points of the `delta`-ball around `x` and writes the
/// norm of the min-norm element of their subgradient hull; `out_is_witness`
/// is set when that norm is at most `eps`.
///
/// # Safety
/// All pointers must be valid; `x` holds `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ns_certify_delta_eps(
    f: *const NsFunction,
    x: *const f64,
    n: usize,
    delta: f64,
    eps: f64,
    samples: usize,
    seed: u64,
    out_value: *mut f64,
    out_is_witness: *mut bool,
) -> NsStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("f"))?;
        let x = Vector::new(slice(x, n, "x")?.to_vec())?;
        if out_value.is_null() || out_is_witness.is_null() {
            return Err(null("out_value/out_is_witness"));
        }
        let mut rng = RngStream::derive(seed, role::CERTIFIER);
        let mut oracle = &f.inner;
        let c = certify_delta_eps(&mut oracle, &x, delta, eps, &Sampling::BallUniform(samples), &mut rng)?;
        *out_value = c.value;
        *out_is_witness = c.kind.is_witness();
        Ok(())
    })
}

/// Runs an experiment from its JSON config and returns the report as a
/// JSON string in `out_report` (release with [`ns_string_free`]). Nothing
/// is written to disk.
///
/// # Safety
/// `config_json` must be NUL-terminated and `out_report` valid.
#[no_mangle]
pub unsafe extern "C" fn ns_run_experiment(config_json: *const c_char, out_report: *mut *mut c_char) -> NsStatus {
    guard(|| {
        if out_report.is_null() {
            return Err(null("out_report"));
        }
        let cfg = ExperimentConfig::from_json(c_str(config_json, "config_json")?)?;
        let out = run_experiment(&cfg)?;
        let text = out.report.to_json()?;
        *out_report = CString::new(text)
            .map_err(|_| NsStatusError(NsStatus::Internal, "report contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ns_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ns_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
