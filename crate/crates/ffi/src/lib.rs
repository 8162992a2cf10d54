//! C ABI over `fracstab`.
//!
//! Every fallible call returns an [`FsStatus`]. On failure the message is kept
//! per thread and can be read with [`fs_last_error`]. Handles are opaque and
//! must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fracstab::config::{self, ConfigFile, Overrides};
use fracstab::harness::{self, RunConfig, RunReport};
use fracstab::{mlf, Error};

/// Status codes. The numeric values of the first four match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    /// The run completed but a gating check failed.
    EnvelopeFail = 1,
    /// Bad argument, config or I/O.
    Usage = 2,
    /// Numerical failure inside the solver or a certificate.
    Numerical = 3,
    NullPointer = 4,
    Panic = 5,
}

/// A validated scenario together with its certificate request.
pub struct FsScenario {
    run: RunConfig,
}

/// Result of [`fs_run`].
pub struct FsReport {
    report: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(e: Error) -> FsStatus {
    let code = e.exit_code();
    set_error(e.to_string());
    if code == 2 {
        FsStatus::Usage
    } else {
        FsStatus::Numerical
    }
}

fn guard(f: impl FnOnce() -> FsStatus) -> FsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            FsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, FsStatus> {
    if p.is_null() {
        set_error(format!("`{name}` is null"));
        return Err(FsStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        FsStatus::Usage
    })
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("`", stringify!($p), "` is null"));
            return FsStatus::NullPointer;
        })+
    };
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next `fs_*` call on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// One-parameter Mittag-Leffler function E_q(z).
///
/// # Safety
/// `out` must be a valid pointer to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn fs_ml_one(q: f64, z: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null!(out);
        match mlf::ml_one(q, z) {
            Ok(v) => {
                *out = v;
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Two-parameter Mittag-Leffler function E_{q,b}(z).
///
/// # Safety
/// `out` must be a valid pointer to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn fs_ml_two(q: f64, b: f64, z: f64, out: *mut f64) -> FsStatus {
    guard(|| {
        non_null!(out);
        match mlf::ml_two(q, b, z) {
            Ok(v) => {
                *out = v;
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

fn build(file: Result<ConfigFile, Error>, out: *mut *mut FsScenario) -> FsStatus {
    match file.and_then(|f| f.build(&Overrides::default())) {
        Ok(run) => {
            unsafe { *out = Box::into_raw(Box::new(FsScenario { run })) };
            FsStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Parse a TOML scenario document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_from_toml(text: *const c_char, out: *mut *mut FsScenario) -> FsStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let text = match str_arg(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        build(ConfigFile::parse(text, "<ffi>"), out)
    })
}

/// Load one of the built-in demo scenarios by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_demo(name: *const c_char, out: *mut *mut FsScenario) -> FsStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let name = match str_arg(name, "name") {
            Ok(t) => t,
            Err(s) => return s,
        };
        build(config::demo(name), out)
    })
}

/// Override the derivative order of a scenario.
///
/// # Safety
/// `scn` must come from an `fs_scenario_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_set_q(scn: *mut FsScenario, q: f64) -> FsStatus {
    guard(|| {
        non_null!(scn);
        let s = &mut (*scn).run.scenario;
        let old = s.q;
        s.q = q;
        if let Err(e) = s.validate() {
            s.q = old;
            return fail(e);
        }
        FsStatus::Ok
    })
}

/// Override the worker count used by parallel stages.
///
/// # Safety
/// `scn` must come from an `fs_scenario_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_set_workers(scn: *mut FsScenario, workers: usize) -> FsStatus {
    guard(|| {
        non_null!(scn);
        (*scn).run.workers = workers.max(1);
        FsStatus::Ok
    })
}

/// # Safety
/// `scn` must be null or come from an `fs_scenario_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn fs_scenario_free(scn: *mut FsScenario) {
    if !scn.is_null() {
        drop(Box::from_raw(scn));
    }
}

/// Simulate, certify and verify. A failed envelope check still produces a
/// report and returns `EnvelopeFail`.
///
/// # Safety
/// `scn` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_run(scn: *const FsScenario, out: *mut *mut FsReport) -> FsStatus {
    guard(|| {
        non_null!(scn, out);
        *out = ptr::null_mut();
        match harness::run_scenario(&(*scn).run) {
            Ok(report) => {
                let pass = report.pass;
                *out = Box::into_raw(Box::new(FsReport { report }));
                if pass {
                    FsStatus::Ok
                } else {
                    set_error("envelope check failed");
                    FsStatus::EnvelopeFail
                }
            }
            Err(e) => fail(e),
        }
    })
}

/// 1 when every gating check passed, 0 otherwise (or on null).
///
/// # Safety
/// `rep` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fs_report_pass(rep: *const FsReport) -> i32 {
    if rep.is_null() {
        return 0;
    }
    (*rep).report.pass as i32
}

/// Text report; release with [`fs_string_free`]. Null on failure.
///
/// # Safety
/// `rep` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fs_report_text(rep: *const FsReport) -> *mut c_char {
    if rep.is_null() {
        set_error("`rep` is null");
        return ptr::null_mut();
    }
    CString::new((*rep).report.render_text()).map_or(ptr::null_mut(), CString::into_raw)
}

/// JSON report; release with [`fs_string_free`]. Null on failure.
///
/// # Safety
/// `rep` must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fs_report_json(rep: *const FsReport) -> *mut c_char {
    if rep.is_null() {
        set_error("`rep` is null");
        return ptr::null_mut();
    }
    match (*rep).report.to_json() {
        Ok(s) => CString::new(s).map_or(ptr::null_mut(), CString::into_raw),
        Err(e) => {
            fail(e);
            ptr::null_mut()
        }
    }
}

/// Number of points in the envelope series (0 when no envelope was checked).
///
/// # Safety
/// `rep` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn fs_report_series_len(rep: *const FsReport) -> usize {
    if rep.is_null() {
        return 0;
    }
    (*rep).report.series.as_ref().map_or(0, |s| s.times.len())
}

/// Copy up to `len` points of the envelope series. Any output pointer may be
/// null to skip that column. Returns the number of points written in `written`.
///
/// # Safety
/// Non-null buffers must hold at least `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_report_series(
    rep: *const FsReport,
    t: *mut f64,
    value: *mut f64,
    bound: *mut f64,
    len: usize,
    written: *mut usize,
) -> FsStatus {
    guard(|| {
        non_null!(rep, written);
        let Some(s) = (*rep).report.series.as_ref() else {
            *written = 0;
            return FsStatus::Ok;
        };
        let n = len.min(s.times.len());
        for (dst, src) in [(t, &s.times), (value, &s.values), (bound, &s.bounds)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, n);
            }
        }
        *written = n;
        FsStatus::Ok
    })
}

/// # Safety
/// `rep` must be null or come from [`fs_run`], freed once.
#[no_mangle]
pub unsafe extern "C" fn fs_report_free(rep: *mut FsReport) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn fs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
