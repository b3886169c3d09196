//! C ABI over `diagform`.
//!
//! Every entry point returns a [`DfStatus`]; results go through out
//! pointers. On failure [`df_last_error_message`] describes the error on the
//! calling thread. Handles are opaque and must be released with the matching
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use diagform::census::{exact_rank, IntMatrix};
use diagform::correlate::{
    ell_correlation, gap_sequence, ks_against_exponential, long_gaps, CorrelationRequest,
};
use diagform::dioph::{count_equation_with_cap, count_inequality, DEFAULT_TABLE_CAP};
use diagform::enumerate::{count_below, generate_sequence};
use diagform::{DiagonalForm, Error, IntervalBox, ValueSequence};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Range = 3,
    Resource = 4,
    Generation = 5,
    Unsupported = 6,
    Precision = 7,
    Overflow = 8,
    Panic = 9,
}

/// A diagonal form `a_1 x_1^d + ... + a_k x_k^d`.
pub struct DfForm(DiagonalForm);

/// The sorted normalized values of a form.
pub struct DfSequence(ValueSequence);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_)
            | Error::Precondition(_)
            | Error::DegenerateColumn(_)
            | Error::Fit(_) => DfStatus::InvalidArgument,
            Error::Range(_) => DfStatus::Range,
            Error::Resource { .. } | Error::Io(_) => DfStatus::Resource,
            Error::Generation { .. } => DfStatus::Generation,
            Error::Unsupported(_) => DfStatus::Unsupported,
            Error::Precision(_) => DfStatus::Precision,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DfStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or point to `n` readable elements.
unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// # Safety
/// `p` must be null or valid for writes.
unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `p` must be null or a live handle.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn df_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn df_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a form from `k` positive coefficients.
///
/// # Safety
/// `alpha` must point to `k` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_form_new(
    degree: u32,
    alpha: *const f64,
    k: usize,
    out: *mut *mut DfForm,
) -> DfStatus {
    guard(|| {
        let a = slice(alpha, k, "alpha")?;
        let form = DiagonalForm::new(degree, a.to_vec())?;
        put(out, Box::into_raw(Box::new(DfForm(form))), "out")
    })
}

/// Releases a form. Null is ignored.
///
/// # Safety
/// `form` must come from [`df_form_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn df_form_free(form: *mut DfForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

/// `c(d, k, alpha)`, the constant giving unit mean spacing.
///
/// # Safety
/// `form` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn df_form_normalization_constant(
    form: *const DfForm,
    out: *mut f64,
) -> DfStatus {
    guard(|| {
        let f = handle(form, "form")?;
        put(out, f.0.normalization_constant(), "out")
    })
}

/// `c * q(x)^{k/d}` for a point of `k` positive integers.
///
/// # Safety
/// `form` must be a live handle, `x` must point to `k` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn df_form_normalized_value(
    form: *const DfForm,
    x: *const u64,
    k: usize,
    out: *mut f64,
) -> DfStatus {
    guard(|| {
        let f = handle(form, "form")?;
        let x = slice(x, k, "x")?;
        put(out, f.0.normalized_value(x)?, "out")
    })
}

/// Number of `x in Z_{>0}^k` with `q(x) <= r`.
///
/// # Safety
/// `form` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn df_count_below(form: *const DfForm, r: f64, out: *mut u64) -> DfStatus {
    guard(|| {
        let f = handle(form, "form")?;
        put(out, count_below(&f.0, r)?, "out")
    })
}

/// The `m` smallest normalized values of the form.
///
/// # Safety
/// `form` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn df_sequence_generate(
    form: *const DfForm,
    m: usize,
    safety: f64,
    out: *mut *mut DfSequence,
) -> DfStatus {
    guard(|| {
        let f = handle(form, "form")?;
        let seq = generate_sequence(&f.0, m, safety)?;
        put(out, Box::into_raw(Box::new(DfSequence(seq))), "out")
    })
}

/// Number of values; 0 for null.
///
/// # Safety
/// `seq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn df_sequence_len(seq: *const DfSequence) -> usize {
    seq.as_ref().map_or(0, |s| s.0.len())
}

/// Borrows the values. The pointer stays valid until the sequence is freed.
///
/// # Safety
/// `seq` must be a live handle; `values` and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn df_sequence_values(
    seq: *const DfSequence,
    values: *mut *const f64,
    len: *mut usize,
) -> DfStatus {
    guard(|| {
        let s = handle(seq, "seq")?;
        if len.is_null() {
            return Err(null("len"));
        }
        put(values, s.0.values().as_ptr(), "values")?;
        put(len, s.0.len(), "len")
    })
}

/// Releases a sequence. Null is ignored.
///
/// # Safety
/// `seq` must come from [`df_sequence_generate`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn df_sequence_free(seq: *mut DfSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Sharp `order`-correlation of the first `m` of `n` sorted values with the
/// window `[lo_j, hi_j)`, `j = 1..order-1`.
///
/// # Safety
/// `values` must point to `n` doubles, `lo`/`hi` to `order - 1` doubles each,
/// and the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn df_ell_correlation(
    values: *const f64,
    n: usize,
    m: usize,
    order: usize,
    lo: *const f64,
    hi: *const f64,
    raw_count: *mut u64,
    statistic: *mut f64,
) -> DfStatus {
    guard(|| {
        let v = slice(values, n, "values")?;
        let dim = order.saturating_sub(1);
        let window = IntervalBox::new(slice(lo, dim, "lo")?.to_vec(), slice(hi, dim, "hi")?.to_vec())?;
        let req = CorrelationRequest::new(order, window, m)?;
        let r = ell_correlation(v, &req)?;
        let raw = u64::try_from(r.raw_count).map_err(|_| {
            Failure(DfStatus::Overflow, format!("raw count {} exceeds 64 bits", r.raw_count))
        })?;
        if statistic.is_null() {
            return Err(null("statistic"));
        }
        put(raw_count, raw, "raw_count")?;
        put(statistic, r.statistic, "statistic")
    })
}

/// Number of gaps `>= threshold` between consecutive sorted values.
///
/// # Safety
/// `values` must point to `n` doubles and `count` be writable.
#[no_mangle]
pub unsafe extern "C" fn df_long_gaps(
    values: *const f64,
    n: usize,
    threshold: f64,
    count: *mut usize,
) -> DfStatus {
    guard(|| {
        let v = slice(values, n, "values")?;
        put(count, long_gaps(v, threshold)?.count, "count")
    })
}

/// Kolmogorov-Smirnov distance of the unit-mean gaps of sorted values from
/// `1 - e^{-s}`.
///
/// # Safety
/// `values` must point to `n` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn df_ks_exponential(
    values: *const f64,
    n: usize,
    out: *mut f64,
) -> DfStatus {
    guard(|| {
        let v = slice(values, n, "values")?;
        put(out, ks_against_exponential(&gap_sequence(v)?)?, "out")
    })
}

/// Solutions of `sum a_j x_j^d = 0` with `|x_j| <= m`; with `primitive`
/// only those with coordinate gcd one. `nonzero` counts solutions with all
/// coordinates nonzero.
///
/// # Safety
/// `a` must point to `k` values; `total` and `nonzero` writable.
#[no_mangle]
pub unsafe extern "C" fn df_count_equation(
    a: *const i64,
    k: usize,
    d: u32,
    m: u64,
    primitive: bool,
    total: *mut u64,
    nonzero: *mut u64,
) -> DfStatus {
    guard(|| {
        let a = slice(a, k, "a")?;
        if nonzero.is_null() {
            return Err(null("nonzero"));
        }
        let c = count_equation_with_cap(a, d, m, primitive, DEFAULT_TABLE_CAP)?;
        put(total, c.total, "total")?;
        put(nonzero, c.nonzero, "nonzero")
    })
}

/// Points of `[m, 2m]^k` with `|sum a_j x_j^d| <= h`.
///
/// # Safety
/// `a` must point to `k` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn df_count_inequality(
    a: *const i64,
    k: usize,
    d: u32,
    m: u64,
    h: f64,
    out: *mut u64,
) -> DfStatus {
    guard(|| {
        let a = slice(a, k, "a")?;
        put(out, count_inequality(a, d, m, h)?, "out")
    })
}

/// Exact rank of a row-major integer matrix.
///
/// # Safety
/// `entries` must point to `rows * cols` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn df_exact_rank(
    entries: *const i64,
    rows: usize,
    cols: usize,
    out: *mut usize,
) -> DfStatus {
    guard(|| {
        let n = rows.checked_mul(cols).ok_or_else(|| {
            Failure(DfStatus::Overflow, "rows * cols overflows".into())
        })?;
        let e = slice(entries, n, "entries")?;
        let data: Vec<Vec<i64>> = e.chunks(cols.max(1)).map(<[i64]>::to_vec).collect();
        let m = IntMatrix::from_rows(&data)?;
        put(out, exact_rank(&m), "out")
    })
}
