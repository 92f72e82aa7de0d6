//! C ABI over `ckvlab`.
//!
//! Objects are opaque heap handles released by their `*_free` function.
//! Every fallible call returns a [`CkvStatus`]; on failure a message is
//! available from [`ckv_last_error`] on the same thread. Output pointers are
//! written only on success. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use ckvlab::ckv::CkvReport as Report;
use ckvlab::metrics::builtin_metric;
use ckvlab::perturb::{self, BumpSpec, TrialRecord};
use ckvlab::{jet, report, CkvError, MetricProvider, Mode, Patch, SolverConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkvMode {
    ConformalKilling = 0,
    Killing = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkvSolverConfig {
    pub mode: CkvMode,
    /// Maximal polynomial degree of the ansatz.
    pub degree: u32,
    /// Collocation points per axis.
    pub grid: usize,
    pub rel_tol: f64,
    pub gap_min: f64,
}

impl From<CkvSolverConfig> for SolverConfig {
    fn from(c: CkvSolverConfig) -> Self {
        SolverConfig {
            mode: match c.mode {
                CkvMode::ConformalKilling => Mode::ConformalKilling,
                CkvMode::Killing => Mode::Killing,
            },
            degree: c.degree,
            grid: c.grid,
            rel_tol: c.rel_tol,
            gap_min: c.gap_min,
        }
    }
}

/// A catalog metric on its default patch.
pub struct CkvMetric {
    inner: Arc<dyn MetricProvider>,
}

pub struct CkvReport {
    inner: Report,
}

pub struct CkvTrial {
    inner: TrialRecord,
    before: CkvReport,
    after: CkvReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(CkvStatus, String);

impl From<CkvError> for Failure {
    fn from(e: CkvError) -> Self {
        let status = if e.is_numerical() {
            CkvStatus::Numerical
        } else {
            CkvStatus::InvalidArgument
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CkvStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CkvStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CkvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CkvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            CkvStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("string contains NUL"))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library on the same thread; do not free.
#[no_mangle]
pub extern "C" fn ckv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ckv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library defaults: conformal mode, degree 3, 6 points per axis,
/// rel_tol 1e-8, gap_min 1e3.
#[no_mangle]
pub extern "C" fn ckv_solver_config_default() -> CkvSolverConfig {
    let d = SolverConfig::default();
    CkvSolverConfig {
        mode: CkvMode::ConformalKilling,
        degree: d.degree,
        grid: d.grid,
        rel_tol: d.rel_tol,
        gap_min: d.gap_min,
    }
}

/// Catalog metric `label` (e.g. "flat", "sphere-stereo", "diag-poly:0.25") in
/// dimension `n`.
///
/// # Safety
/// `label` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_metric_new(
    label: *const c_char,
    n: usize,
    out: *mut *mut CkvMetric,
) -> CkvStatus {
    guard(|| {
        let label = str_arg(label, "label")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = builtin_metric(label, n)?;
        put(out, CkvMetric { inner });
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a handle from [`ckv_metric_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ckv_metric_free(m: *mut CkvMetric) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of the metric, 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live metric handle.
#[no_mangle]
pub unsafe extern "C" fn ckv_metric_dim(m: *const CkvMetric) -> usize {
    m.as_ref().map_or(0, |m| m.inner.dim())
}

/// Patch bounds, `n` values each.
///
/// # Safety
/// `m` must be a live metric handle; `lower` and `upper` must hold `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn ckv_metric_patch(
    m: *const CkvMetric,
    lower: *mut f64,
    upper: *mut f64,
    len: usize,
) -> CkvStatus {
    guard(|| {
        let m = borrow(m, "metric")?;
        if lower.is_null() || upper.is_null() {
            return Err(null("bounds"));
        }
        let p = m.inner.patch();
        if len != p.dim() {
            return Err(CkvError::DimensionMismatch {
                expected: p.dim(),
                got: len,
            }
            .into());
        }
        ptr::copy_nonoverlapping(p.lower().as_ptr(), lower, len);
        ptr::copy_nonoverlapping(p.upper().as_ptr(), upper, len);
        Ok(())
    })
}

/// Metric components at `x` (length n), written row-major into `out`
/// (length n*n).
///
/// # Safety
/// `m` must be a live metric handle; `x` and `out` must hold the given
/// lengths.
#[no_mangle]
pub unsafe extern "C" fn ckv_metric_eval(
    m: *const CkvMetric,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> CkvStatus {
    guard(|| {
        let m = borrow(m, "metric")?;
        let x = slice_arg(x, x_len, "x")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = m.inner.dim();
        if out_len != n * n {
            return Err(CkvError::DimensionMismatch {
                expected: n * n,
                got: out_len,
            }
            .into());
        }
        m.inner.patch().check(x)?;
        let g = m.inner.eval(x);
        for i in 0..n {
            for j in 0..n {
                *out.add(i * n + j) = g[(i, j)];
            }
        }
        Ok(())
    })
}

/// Numerical dimension of the (conformal) Killing fields of `m`.
///
/// # Safety
/// `m` must be a live metric handle, `config` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_count(
    m: *const CkvMetric,
    config: *const CkvSolverConfig,
    out: *mut *mut CkvReport,
) -> CkvStatus {
    guard(|| {
        let m = borrow(m, "metric")?;
        let config: SolverConfig = (*borrow(config, "config")?).into();
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = ckvlab::count_ckv(m.inner.as_ref(), &config)?;
        put(out, CkvReport { inner });
        Ok(())
    })
}

/// # Safety
/// `r` must be NULL or an owned report handle, not yet freed. Reports
/// borrowed from a trial must not be passed here.
#[no_mangle]
pub unsafe extern "C" fn ckv_report_free(r: *mut CkvReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ckv_report_nullity(r: *const CkvReport) -> usize {
    r.as_ref().map_or(0, |r| r.inner.nullity)
}

/// Gap ratio; +infinity when there is no boundary to measure, NaN for NULL.
///
/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ckv_report_gap_ratio(r: *const CkvReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.inner.gap_ratio)
}

/// # Safety
/// `r` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ckv_report_ambiguous(r: *const CkvReport) -> bool {
    r.as_ref().is_some_and(|r| r.inner.ambiguous)
}

/// Copies up to `cap` singular values (descending) into `out` and stores the
/// full count in `total`. `out` may be NULL when `cap` is 0.
///
/// # Safety
/// `r` must be a live report handle, `out` must hold `cap` doubles and
/// `total` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_report_singular_values(
    r: *const CkvReport,
    out: *mut f64,
    cap: usize,
    total: *mut usize,
) -> CkvStatus {
    guard(|| {
        let r = borrow(r, "report")?;
        if total.is_null() || (out.is_null() && cap > 0) {
            return Err(null("output"));
        }
        let s = &r.inner.singular_values;
        let k = cap.min(s.len());
        if k > 0 {
            ptr::copy_nonoverlapping(s.as_ptr(), out, k);
        }
        *total = s.len();
        Ok(())
    })
}

/// Canonical JSON of the report; free with [`ckv_string_free`].
///
/// # Safety
/// `r` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_report_to_json(
    r: *const CkvReport,
    out: *mut *mut c_char,
) -> CkvStatus {
    guard(|| {
        let r = borrow(r, "report")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = c_string(report::to_canonical_json(&report::ckv_report_json(
            &r.inner,
        )))?;
        Ok(())
    })
}

/// One seeded bump perturbation of `m` with amplitude `eps`. A perturbation
/// that breaks positive definiteness returns `CKV_STATUS_NUMERICAL`.
///
/// # Safety
/// `m` must be a live metric handle, `config` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_perturb_trial(
    m: *const CkvMetric,
    config: *const CkvSolverConfig,
    eps: f64,
    seed: u64,
    out: *mut *mut CkvTrial,
) -> CkvStatus {
    guard(|| {
        let m = borrow(m, "metric")?;
        let config: SolverConfig = (*borrow(config, "config")?).into();
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = perturb::run_genericity_trial(m.inner.clone(), &config, eps, seed)?;
        put(
            out,
            CkvTrial {
                before: CkvReport {
                    inner: inner.before.clone(),
                },
                after: CkvReport {
                    inner: inner.after.clone(),
                },
                inner,
            },
        );
        Ok(())
    })
}

/// Report of the unperturbed metric, owned by the trial.
///
/// # Safety
/// `t` must be NULL or a live trial handle.
#[no_mangle]
pub unsafe extern "C" fn ckv_trial_before(t: *const CkvTrial) -> *const CkvReport {
    t.as_ref().map_or(ptr::null(), |t| &t.before)
}

/// Report of the perturbed metric, owned by the trial.
///
/// # Safety
/// `t` must be NULL or a live trial handle.
#[no_mangle]
pub unsafe extern "C" fn ckv_trial_after(t: *const CkvTrial) -> *const CkvReport {
    t.as_ref().map_or(ptr::null(), |t| &t.after)
}

/// # Safety
/// `t` must be a live trial handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_trial_to_json(t: *const CkvTrial, out: *mut *mut c_char) -> CkvStatus {
    guard(|| {
        let t = borrow(t, "trial")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = c_string(report::to_canonical_json(&report::trial_json(&t.inner)))?;
        Ok(())
    })
}

/// # Safety
/// `t` must be NULL or a trial handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ckv_trial_free(t: *mut CkvTrial) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Conformal-mode reports of `m` and of `m` rescaled by the catalog factor
/// `factor` ("const-2", "exp-x1", "sphere").
///
/// # Safety
/// `m` must be a live metric handle, `factor` a NUL-terminated string,
/// `config` readable and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_invariance_check(
    m: *const CkvMetric,
    factor: *const c_char,
    config: *const CkvSolverConfig,
    out_base: *mut *mut CkvReport,
    out_scaled: *mut *mut CkvReport,
) -> CkvStatus {
    guard(|| {
        let m = borrow(m, "metric")?;
        let factor = str_arg(factor, "factor")?;
        let config: SolverConfig = (*borrow(config, "config")?).into();
        if out_base.is_null() || out_scaled.is_null() {
            return Err(null("out"));
        }
        let (base, scaled) = perturb::conformal_invariance_check(m.inner.clone(), factor, &config)?;
        put(out_base, CkvReport { inner: base });
        put(out_scaled, CkvReport { inner: scaled });
        Ok(())
    })
}

/// Whether the jet parameter domain is strictly smaller than the metric jet
/// space at dimension `n` and order `k`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_jet_sard_holds(n: u64, k: u64, out: *mut bool) -> CkvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n < 2 {
            return Err(invalid(format!("n must be >= 2, got {n}")));
        }
        *out = jet::sard_inequality_holds(n, k);
        Ok(())
    })
}

/// All jet dimensions at `(n, k)` as JSON, exact integers as decimal strings.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_jet_record_json(n: u64, k: u64, out: *mut *mut c_char) -> CkvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n < 2 {
            return Err(invalid(format!("n must be >= 2, got {n}")));
        }
        let record = jet::JetDimensionRecord::new(n, k);
        *out = c_string(report::to_canonical_json(&report::jet_record_json(&record)))?;
        Ok(())
    })
}

/// Smooth bump of the given center and radius evaluated at `x`.
///
/// # Safety
/// `center` and `x` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ckv_bump(
    center: *const f64,
    x: *const f64,
    n: usize,
    radius: f64,
    out: *mut f64,
) -> CkvStatus {
    guard(|| {
        let center = slice_arg(center, n, "center")?;
        let x = slice_arg(x, n, "x")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("radius must be positive, got {radius}")));
        }
        let lower: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let upper: Vec<f64> = center.iter().map(|c| c + radius).collect();
        let spec = BumpSpec::new(&Patch::new(lower, upper)?, center.to_vec(), radius)?;
        *out = perturb::bump(&spec, x);
        Ok(())
    })
}
