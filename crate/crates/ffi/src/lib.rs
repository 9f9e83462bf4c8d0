//! C ABI over `clearnet`.
//!
//! Systems live behind an opaque `ClearnetSystem` handle. Every call returns
//! a `ClearnetStatus`; on failure `clearnet_last_error()` gives a message for
//! the calling thread. Matrices are row-major, sink last, and output buffers
//! must hold one value per node (sink entries are written as 0 for losses).

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use clearnet::nalgebra::{DMatrix, DVector};
use clearnet::{centrality, clearing, equivalence, shocks, spectral};
use clearnet::{ClearingParams, Error, FinancialSystem, Rate};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClearnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    BufferTooSmall = 3,
    Singular = 4,
    NoConvergence = 5,
    Precondition = 6,
    SpectralCondition = 7,
    EquivalenceFailed = 8,
    Panic = 9,
}

/// Opaque system handle.
pub struct ClearnetSystem {
    inner: FinancialSystem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ClearnetStatus {
    match err {
        Error::SingularSystem { .. } | Error::DivisionByZero { .. } => ClearnetStatus::Singular,
        Error::NoConvergence { .. }
        | Error::OracleNoConvergence { .. }
        | Error::PowerIterationStall { .. } => ClearnetStatus::NoConvergence,
        Error::SpectralCondition { .. } => ClearnetStatus::SpectralCondition,
        e if e.is_precondition() => ClearnetStatus::Precondition,
        Error::SearchExhausted { .. }
        | Error::SelfConsistencyFailed { .. }
        | Error::NotAllDefaulted { .. } => ClearnetStatus::Precondition,
        _ => ClearnetStatus::InvalidInput,
    }
}

enum Failure {
    Status(ClearnetStatus, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<ClearnetStatus, Failure>) -> ClearnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure::Status(status, msg))) => {
            set_error(msg);
            status
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            ClearnetStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(ClearnetStatus::NullPointer, format!("{what} is null"))
}

unsafe fn system_ref<'a>(sys: *const ClearnetSystem) -> Result<&'a FinancialSystem, Failure> {
    sys.as_ref().map(|s| &s.inner).ok_or_else(|| null("system"))
}

unsafe fn out_slice<'a>(out: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < need {
        return Err(Failure::Status(
            ClearnetStatus::BufferTooSmall,
            format!("output buffer holds {len} values, need {need}"),
        ));
    }
    Ok(slice::from_raw_parts_mut(out, need))
}

fn copy_into(dst: &mut [f64], src: &DVector<f64>) {
    dst.copy_from_slice(src.as_slice());
}

fn bank_values_into(dst: &mut [f64], src: &DVector<f64>, banks: usize) {
    dst.fill(0.0);
    dst[..banks].copy_from_slice(&src.as_slice()[..banks]);
}

/// Builds a system from an `n x n` row-major liability matrix and `n`
/// pre-shock assets. `external_assets` may be null, in which case the
/// pre-shock assets are used.
///
/// # Safety
/// `liabilities` must point to `n * n` doubles, the asset arrays to `n`
/// doubles, and `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn clearnet_system_new(
    n: usize,
    liabilities: *const f64,
    pre_shock_assets: *const f64,
    external_assets: *const f64,
    out: *mut *mut ClearnetSystem,
) -> ClearnetStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if liabilities.is_null() {
            return Err(null("liabilities"));
        }
        if pre_shock_assets.is_null() {
            return Err(null("pre_shock_assets"));
        }
        let cells = n.checked_mul(n).ok_or_else(|| {
            Failure::Status(
                ClearnetStatus::InvalidInput,
                format!("dimension {n} overflows"),
            )
        })?;
        let l = DMatrix::from_row_slice(n, n, slice::from_raw_parts(liabilities, cells));
        let o = DVector::from_column_slice(slice::from_raw_parts(pre_shock_assets, n));
        let a = (!external_assets.is_null())
            .then(|| DVector::from_column_slice(slice::from_raw_parts(external_assets, n)));
        let inner = FinancialSystem::new(l, o, a)?;
        *out = Box::into_raw(Box::new(ClearnetSystem { inner }));
        Ok(ClearnetStatus::Ok)
    })
}

/// # Safety
/// `sys` must be null or a handle from `clearnet_system_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn clearnet_system_free(sys: *mut ClearnetSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Node count including the sink, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn clearnet_system_node_count(sys: *const ClearnetSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.inner.node_count())
}

/// Clearing vector by the fictitious default sequence. `defaults` (one byte
/// per node, 1 = defaulted) and `iterations` may be null.
///
/// # Safety
/// `sys` must be a live handle; `payments` must hold `len` doubles and
/// `defaults`, when given, `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn clearnet_clear(
    sys: *const ClearnetSystem,
    r: f64,
    r_a: f64,
    payments: *mut f64,
    defaults: *mut u8,
    len: usize,
    iterations: *mut usize,
) -> ClearnetStatus {
    guard(|| {
        let system = system_ref(sys)?;
        let n = system.node_count();
        let out = out_slice(payments, len, n)?;
        let params = ClearingParams::new(r).with_external_recovery(r_a);
        let solution = clearing::fictitious_default_sequence(system, &params)?;
        copy_into(out, &solution.payments);
        if !defaults.is_null() {
            let flags = slice::from_raw_parts_mut(defaults, n);
            for (dst, &d) in flags.iter_mut().zip(solution.defaults.flags()) {
                *dst = u8::from(d);
            }
        }
        if let Some(it) = iterations.as_mut() {
            *it = solution.iterations;
        }
        Ok(ClearnetStatus::Ok)
    })
}

/// Systemic losses `l - p` after the full-default shock with interpolation
/// `m`, cleared at recovery rate `r`.
///
/// # Safety
/// `sys` must be a live handle and `sigma` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn clearnet_full_shock_loss(
    sys: *const ClearnetSystem,
    r: f64,
    m: f64,
    sigma: *mut f64,
    len: usize,
) -> ClearnetStatus {
    guard(|| {
        let system = system_ref(sys)?;
        let out = out_slice(sigma, len, system.node_count())?;
        let scenario = shocks::full_default_shock(system, &Rate::Uniform(m))?;
        let solution =
            clearing::fictitious_default_sequence(&scenario.system, &ClearingParams::new(r))?;
        let loss = clearing::systemic_loss(&solution, system.total_liabilities());
        bank_values_into(out, &loss, system.bank_count());
        Ok(ClearnetStatus::Ok)
    })
}

/// Generalized Katz centrality with attenuation `r` and interpolation `m`.
///
/// # Safety
/// `sys` must be a live handle and `sigma` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn clearnet_katz(
    sys: *const ClearnetSystem,
    r: f64,
    m: f64,
    sigma: *mut f64,
    len: usize,
) -> ClearnetStatus {
    guard(|| {
        let system = system_ref(sys)?;
        let out = out_slice(sigma, len, system.node_count())?;
        let res = centrality::system_katz(system, &Rate::Uniform(r), &Rate::Uniform(m))?;
        bank_values_into(out, &res.sigma, system.bank_count());
        Ok(ClearnetStatus::Ok)
    })
}

/// Compares full-shock clearing losses with the Katz measure. Returns
/// `CLEARNET_STATUS_EQUIVALENCE_FAILED` when the gap exceeds `tol` or the
/// shock does not clear in one step. `max_gap` may be null.
///
/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn clearnet_verify(
    sys: *const ClearnetSystem,
    r: f64,
    m: f64,
    tol: f64,
    max_gap: *mut f64,
) -> ClearnetStatus {
    guard(|| {
        let system = system_ref(sys)?;
        let report = equivalence::verify_full_shock_equivalence(
            system,
            &ClearingParams::new(r),
            &Rate::Uniform(m),
            tol,
        )?;
        if let Some(g) = max_gap.as_mut() {
            *g = report.max_abs_gap;
        }
        if report.pass {
            Ok(ClearnetStatus::Ok)
        } else {
            Err(Failure::Status(
                ClearnetStatus::EquivalenceFailed,
                format!(
                    "max gap {:e} against tolerance {:e} (one step: {}, all defaulted: {})",
                    report.max_abs_gap, report.tolerance, report.one_step, report.all_defaulted
                ),
            ))
        }
    })
}

/// Spectral radius of the relative-claims matrix.
///
/// # Safety
/// `sys` must be a live handle and `radius` writable.
#[no_mangle]
pub unsafe extern "C" fn clearnet_spectral_radius(
    sys: *const ClearnetSystem,
    radius: *mut f64,
) -> ClearnetStatus {
    guard(|| {
        let system = system_ref(sys)?;
        let out = radius.as_mut().ok_or_else(|| null("radius"))?;
        *out = spectral::spectral_radius(
            system.relative_claims().matrix(),
            spectral::DEFAULT_TOL,
            spectral::DEFAULT_MAX_ITER,
        )?;
        Ok(ClearnetStatus::Ok)
    })
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn clearnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated library version.
#[no_mangle]
pub extern "C" fn clearnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
