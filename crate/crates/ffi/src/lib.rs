//! C ABI over the `grouptop` verifications.
//!
//! Reports are returned as opaque `GtReport` handles and released with
//! `gt_report_free`. Strings returned by this library are released with
//! `gt_string_free`. On a non-`GT_STATUS_OK` return, `gt_last_error` describes
//! the failure until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use grouptop::cli::RunConfig;
use grouptop::examples::{hensel_sqrt, verify_sqrt7_necessary, verify_sqrt7_necessary_range};
use grouptop::filters::hausdorff_verdict;
use grouptop::nonabelian::verify_fib_identity;
use grouptop::report::{Status, VerificationReport};
use num_bigint::BigInt;

/// Return code of every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    ParseError = 4,
    Panic = 5,
}

/// Overall outcome of a report, mirroring the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtOutcome {
    Verified = 0,
    Refuted = 2,
    Unknown = 3,
}

impl From<Status> for GtOutcome {
    fn from(s: Status) -> Self {
        match s {
            Status::Verified => GtOutcome::Verified,
            Status::Refuted => GtOutcome::Refuted,
            Status::Unknown => GtOutcome::Unknown,
        }
    }
}

/// Opaque verification report.
pub struct GtReport {
    report: VerificationReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, stores its error message, and converts panics to `GT_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> Result<(), (GtStatus, String)>) -> GtStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GtStatus::Panic
        }
    }
}

unsafe fn emit_report(out: *mut *mut GtReport, report: VerificationReport) {
    *out = Box::into_raw(Box::new(GtReport { report }));
}

fn invalid(e: impl ToString) -> (GtStatus, String) {
    (GtStatus::InvalidArgument, e.to_string())
}

/// Verifies `g ∉ n·S(k)*` for the sqrt7 chain.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gt_verify_sqrt7_necessary(
    g: i64,
    n: u32,
    out: *mut *mut GtReport,
) -> GtStatus {
    guard(|| {
        if out.is_null() {
            return Err((GtStatus::NullPointer, "out is null".into()));
        }
        let r = verify_sqrt7_necessary(&BigInt::from(g), n as usize).map_err(invalid)?;
        emit_report(out, r);
        Ok(())
    })
}

/// All `1 ≤ |g| ≤ gmax`, `1 ≤ n ≤ nmax`, one claim per `(|g|, n)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gt_verify_sqrt7_range(
    gmax: u64,
    nmax: u32,
    out: *mut *mut GtReport,
) -> GtStatus {
    guard(|| {
        if out.is_null() {
            return Err((GtStatus::NullPointer, "out is null".into()));
        }
        let r = verify_sqrt7_necessary_range(gmax, nmax as usize).map_err(invalid)?;
        emit_report(out, r);
        Ok(())
    })
}

/// The Fibonacci commutator identities for `i ≤ n`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gt_verify_fib_identity(n: u32, out: *mut *mut GtReport) -> GtStatus {
    guard(|| {
        if out.is_null() {
            return Err((GtStatus::NullPointer, "out is null".into()));
        }
        let r = verify_fib_identity(n as usize).map_err(invalid)?;
        emit_report(out, r);
        Ok(())
    })
}

/// Runs the Hausdorff criteria on a JSON config (same schema as the CLI).
///
/// # Safety
/// `config` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gt_hausdorff_from_json(
    config: *const c_char,
    out: *mut *mut GtReport,
) -> GtStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return Err((GtStatus::NullPointer, "config or out is null".into()));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| (GtStatus::InvalidUtf8, e.to_string()))?;
        let cfg = RunConfig::from_json(text).map_err(|e| (GtStatus::ParseError, e))?;
        let r = hausdorff_verdict(&cfg.family, &cfg.probes, &cfg.budget).map_err(invalid)?;
        emit_report(out, r);
        Ok(())
    })
}

/// Canonical square root of `a` modulo `p^k`, as a decimal string.
///
/// # Safety
/// `root` must be a valid pointer to writable storage for one string.
#[no_mangle]
pub unsafe extern "C" fn gt_hensel_sqrt(
    a: i64,
    p: u64,
    k: u32,
    root: *mut *mut c_char,
) -> GtStatus {
    guard(|| {
        if root.is_null() {
            return Err((GtStatus::NullPointer, "root is null".into()));
        }
        let w = hensel_sqrt(&BigInt::from(a), p, k).map_err(invalid)?;
        *root = CString::new(w.root.to_string()).expect("digits").into_raw();
        Ok(())
    })
}

/// Overall outcome; `GT_OUTCOME_UNKNOWN` for a null handle.
///
/// # Safety
/// `report` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gt_report_outcome(report: *const GtReport) -> GtOutcome {
    match report.as_ref() {
        Some(r) => r.report.status.into(),
        None => GtOutcome::Unknown,
    }
}

/// Number of claims; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gt_report_claim_count(report: *const GtReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.claims.len())
}

/// The report as pretty-printed JSON; null for a null handle.
///
/// # Safety
/// `report` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gt_report_to_json(report: *const GtReport) -> *mut c_char {
    match report.as_ref() {
        Some(r) => CString::new(r.report.to_json())
            .expect("json has no nul")
            .into_raw(),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gt_report_free(report: *mut GtReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Owned by the
/// library; valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn gt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let p = gt_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn sqrt7_report_round_trip() {
        let mut r = ptr::null_mut();
        unsafe {
            assert_eq!(gt_verify_sqrt7_range(5, 2, &mut r), GtStatus::Ok);
            assert_eq!(gt_report_outcome(r), GtOutcome::Verified);
            assert_eq!(gt_report_claim_count(r), 10);
            let json = gt_report_to_json(r);
            let parsed =
                VerificationReport::from_json(CStr::from_ptr(json).to_str().unwrap()).unwrap();
            assert!(parsed.recheck().ok());
            gt_string_free(json);
            gt_report_free(r);
        }
        assert!(gt_last_error().is_null());
    }

    #[test]
    fn errors_are_reported() {
        let mut r = ptr::null_mut();
        unsafe {
            assert_eq!(
                gt_verify_sqrt7_necessary(0, 1, &mut r),
                GtStatus::InvalidArgument
            );
            assert!(r.is_null());
            assert!(!last_error().is_empty());
            assert_eq!(
                gt_verify_fib_identity(3, ptr::null_mut()),
                GtStatus::NullPointer
            );
            let bad = CString::new("{\"family\": 1}").unwrap();
            assert_eq!(
                gt_hausdorff_from_json(bad.as_ptr(), &mut r),
                GtStatus::ParseError
            );
            assert!(last_error().contains("line 1"));
            assert_eq!(gt_report_outcome(ptr::null()), GtOutcome::Unknown);
            assert!(gt_report_to_json(ptr::null()).is_null());
        }
    }

    #[test]
    fn hensel_and_hausdorff() {
        let mut root = ptr::null_mut();
        unsafe {
            assert_eq!(gt_hensel_sqrt(7, 3, 3, &mut root), GtStatus::Ok);
            assert_eq!(CStr::from_ptr(root).to_str().unwrap(), "13");
            gt_string_free(root);
            assert_eq!(
                gt_hensel_sqrt(2, 3, 1, &mut root),
                GtStatus::InvalidArgument
            );
            let cfg = CString::new(
                r#"{"family": {"kind": "chain", "generator": "sqrt7"}, "probes": [1], "budget": {"n_max": 1, "depth": 4, "max_len": 2}}"#,
            )
            .unwrap();
            let mut r = ptr::null_mut();
            assert_eq!(gt_hausdorff_from_json(cfg.as_ptr(), &mut r), GtStatus::Ok);
            assert_eq!(gt_report_outcome(r), GtOutcome::Refuted);
            gt_report_free(r);
        }
    }
}
