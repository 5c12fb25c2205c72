//! C ABI over `finslerkit`.
//!
//! Metrics are opaque handles built from a JSON config document (the same
//! schema as the CLI). Every function returns a status code; on failure the
//! message is available from [`fk_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use finslerkit::cli::{build_metric, parse_config};
use finslerkit::metrics::ConicMetric;
use finslerkit::numkernel::eigen_classify;
use finslerkit::{Error, ErrorKind};

pub const FK_OK: c_int = 0;
pub const FK_NULL_POINTER: c_int = 1;
pub const FK_INVALID_CONFIG: c_int = 2;
pub const FK_OUTSIDE_DOMAIN: c_int = 3;
pub const FK_NUMERICAL: c_int = 4;
pub const FK_DIMENSION_MISMATCH: c_int = 5;
pub const FK_PANIC: c_int = 6;

/// Opaque metric handle.
pub struct FkMetric {
    inner: ConicMetric,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
    Ok(s) => s,
    Err(_) => panic!("version string"),
};

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> c_int {
    match e {
        Error::DimensionMismatch { .. } => FK_DIMENSION_MISMATCH,
        _ => match e.kind() {
            ErrorKind::Usage => FK_INVALID_CONFIG,
            ErrorKind::Domain => FK_OUTSIDE_DOMAIN,
            ErrorKind::Numerical => FK_NUMERICAL,
        },
    }
}

struct Fail(c_int);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(format!("{}: {e}", e.code()));
        Fail(status_of(&e))
    }
}

fn null(what: &str) -> Fail {
    set_error(format!("null pointer: {what}"));
    Fail(FK_NULL_POINTER)
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            FK_OK
        }
        Ok(Err(Fail(code))) => code,
        Err(_) => {
            set_error("internal panic".into());
            FK_PANIC
        }
    }
}

/// # Safety
/// `p` must be null or point to `n` readable doubles.
unsafe fn input<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

fn handle<'a>(m: *const FkMetric) -> Result<&'a ConicMetric, Fail> {
    // SAFETY: non-null handles come from `fk_metric_from_json` and stay
    // valid until `fk_metric_free`.
    unsafe { m.as_ref() }.map(|m| &m.inner).ok_or_else(|| null("metric"))
}

fn check_n(m: &ConicMetric, n: usize) -> Result<(), Fail> {
    if m.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: m.dimension(),
            found: n,
        }
        .into());
    }
    Ok(())
}

/// Builds a metric from a NUL-terminated JSON config document
/// (`{"metric": ..., "run": ...}`) and stores a new handle in `*out`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_metric_from_json(json: *const c_char, out: *mut *mut FkMetric) -> c_int {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::InvalidArgument(format!("config is not UTF-8: {e}")))?;
        let (spec, run) = parse_config(text)?;
        let built = build_metric(&spec, &run)?;
        *out = Box::into_raw(Box::new(FkMetric { inner: built.metric }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `metric` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fk_metric_free(metric: *mut FkMetric) {
    if !metric.is_null() {
        drop(Box::from_raw(metric));
    }
}

/// Manifold dimension, or 0 for a null handle.
///
/// # Safety
/// `metric` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fk_metric_dimension(metric: *const FkMetric) -> usize {
    metric.as_ref().map_or(0, |m| m.inner.dimension())
}

/// `F(base, vec)` into `*out`.
///
/// # Safety
/// `base` and `vec` must point to `n` doubles, `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn fk_metric_eval(
    metric: *const FkMetric,
    base: *const f64,
    vec: *const f64,
    n: usize,
    out: *mut f64,
) -> c_int {
    guard(|| {
        let m = handle(metric)?;
        check_n(m, n)?;
        let (p, v) = (input(base, n, "base")?, input(vec, n, "vec")?);
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.eval(p, v)?;
        Ok(())
    })
}

/// Fundamental tensor at `(base, vec)`, written row-major into `out[n*n]`.
///
/// # Safety
/// `base` and `vec` must point to `n` doubles, `out` to `n*n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fk_metric_tensor(
    metric: *const FkMetric,
    base: *const f64,
    vec: *const f64,
    n: usize,
    out: *mut f64,
) -> c_int {
    guard(|| {
        let m = handle(metric)?;
        check_n(m, n)?;
        let (p, v) = (input(base, n, "base")?, input(vec, n, "vec")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let g = m.tensor(p, v)?;
        let dst = slice::from_raw_parts_mut(out, n * n);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = g.entry(i, j);
            }
        }
        Ok(())
    })
}

/// Sign type of the fundamental tensor: `*classification` is 0 positive definite,
/// 1 positive semi-definite degenerate, 2 indefinite, 3 negative
/// semi-definite, 4 negative definite. Eigenvalues within
/// `tolerance * ||g||` of zero count as zero.
///
/// # Safety
/// `base` and `vec` must point to `n` doubles; `classification` and `min_eigenvalue`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn fk_metric_classify(
    metric: *const FkMetric,
    base: *const f64,
    vec: *const f64,
    n: usize,
    tolerance: f64,
    classification: *mut i32,
    min_eigenvalue: *mut f64,
) -> c_int {
    guard(|| {
        let m = handle(metric)?;
        check_n(m, n)?;
        let (p, v) = (input(base, n, "base")?, input(vec, n, "vec")?);
        if classification.is_null() || min_eigenvalue.is_null() {
            return Err(null("classification/min_eigenvalue"));
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tolerance}")).into());
        }
        let report = eigen_classify(&m.tensor(p, v)?, tolerance)?;
        *classification = report.classification.as_code();
        *min_eigenvalue = report.min_eigenvalue;
        Ok(())
    })
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next `fk_` call on the same thread.
#[no_mangle]
pub extern "C" fn fk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn fk_version() -> *const c_char {
    VERSION.as_ptr()
}
