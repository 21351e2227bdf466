//! C ABI for the synthesizer.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every entry point returns a [`SynrecStatus`];
//! on failure, [`synrec_last_error`] describes the cause. Strings returned
//! through handles stay valid until the handle is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use synrec_core::cegis::{synthesize, verify, Status, SynthesisConfig, Verification};
use synrec_core::evaluator::{ControlAssignment, Layout};
use synrec_core::expander::expand_program;
use synrec_core::surface::{parse_with_library, pretty_print_program, Program, PRELUDE};
use synrec_core::Error;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynrecStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Syntax, name resolution or type error in the source.
    ParseError = 3,
    /// The templates could not be expanded.
    ExpandError = 4,
    /// A configuration value was rejected.
    ConfigError = 5,
    /// No assignment satisfies the harness within the bounds.
    Unsatisfiable = 6,
    /// The time budget ran out.
    Timeout = 7,
    /// Verification found a failing input.
    CheckFailed = 8,
    /// The program still contains holes or choices where none are allowed.
    NotConcrete = 9,
    /// An internal error or panic.
    Internal = 10,
}

/// Bounds and switches of a synthesis run.
pub struct SynrecConfig(SynthesisConfig);

/// A parsed and resolved program, with the template library merged in.
pub struct SynrecProgram(Program);

/// Outcome of [`synrec_synthesize`].
pub struct SynrecResult {
    status: SynrecStatus,
    solution: Option<CString>,
    stats: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: SynrecStatus, msg: impl Into<String>) -> SynrecStatus {
    set_error(msg);
    status
}

fn error_status(e: &Error) -> SynrecStatus {
    match e {
        Error::Syntax { .. } | Error::Resolve { .. } | Error::Type { .. } => SynrecStatus::ParseError,
        Error::Expand { .. } => SynrecStatus::ExpandError,
        Error::Config(_) => SynrecStatus::ConfigError,
        Error::Print(_) | Error::Eval(_) => SynrecStatus::Internal,
    }
}

fn from_error(e: Error) -> SynrecStatus {
    fail(error_status(&e), e.to_string())
}

/// Runs `f`, converting panics into [`SynrecStatus::Internal`].
fn guard(f: impl FnOnce() -> SynrecStatus) -> SynrecStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(SynrecStatus::Internal, "internal panic"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, SynrecStatus> {
    if p.is_null() {
        return Err(fail(SynrecStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SynrecStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn cstring(s: String) -> CString {
    CString::new(s.replace('\0', " ")).expect("nul bytes replaced")
}

/// Message of the last failure on this thread; empty if none. The pointer
/// is valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn synrec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn synrec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// A configuration with default bounds.
#[no_mangle]
pub extern "C" fn synrec_config_new() -> *mut SynrecConfig {
    Box::into_raw(Box::new(SynrecConfig(SynthesisConfig::default())))
}

/// # Safety
/// `cfg` must be null or come from [`synrec_config_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn synrec_config_free(cfg: *mut SynrecConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn with_config(cfg: *mut SynrecConfig, f: impl FnOnce(&mut SynthesisConfig)) -> SynrecStatus {
    match cfg.as_mut() {
        None => fail(SynrecStatus::NullArgument, "config is null"),
        Some(c) => {
            let before = c.0.clone();
            f(&mut c.0);
            match c.0.validate() {
                Ok(()) => SynrecStatus::Ok,
                Err(e) => {
                    c.0 = before;
                    from_error(e)
                }
            }
        }
    }
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_config_set_input_depth(cfg: *mut SynrecConfig, depth: u32) -> SynrecStatus {
    with_config(cfg, |c| c.input_depth = depth)
}

/// Integer leaves of verification inputs, both bounds inclusive.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_config_set_int_domain(cfg: *mut SynrecConfig, lo: i64, hi: i64) -> SynrecStatus {
    with_config(cfg, |c| c.int_domain = (lo, hi))
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_config_set_hole_domain(cfg: *mut SynrecConfig, lo: i64, hi: i64) -> SynrecStatus {
    with_config(cfg, |c| c.hole_domain = (lo, hi))
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_config_set_inline_bound(cfg: *mut SynrecConfig, bound: u32) -> SynrecStatus {
    with_config(cfg, |c| c.inline_bound = bound as usize)
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_config_set_unroll(cfg: *mut SynrecConfig, depth: u32) -> SynrecStatus {
    with_config(cfg, |c| c.unroll = depth as usize)
}

/// Zero disables the time budget.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_config_set_timeout_ms(cfg: *mut SynrecConfig, ms: u64) -> SynrecStatus {
    with_config(cfg, |c| c.timeout = (ms > 0).then(|| Duration::from_millis(ms)))
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_config_set_decomposition(cfg: *mut SynrecConfig, enabled: bool) -> SynrecStatus {
    with_config(cfg, |c| c.indecomp = enabled)
}

/// Parses `source` with the template library `library`, or with the bundled
/// library when `library` is null.
///
/// # Safety
/// String arguments must be null or nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn synrec_program_parse(
    source: *const c_char,
    library: *const c_char,
    out: *mut *mut SynrecProgram,
) -> SynrecStatus {
    guard(|| {
        if out.is_null() {
            return fail(SynrecStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let src = match text(source, "source") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let lib = if library.is_null() {
            PRELUDE
        } else {
            match text(library, "library") {
                Ok(s) => s,
                Err(s) => return s,
            }
        };
        match parse_with_library(src, lib) {
            Ok((p, _)) => {
                *out = Box::into_raw(Box::new(SynrecProgram(p)));
                SynrecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `prog` must be null or a live program handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_program_free(prog: *mut SynrecProgram) {
    if !prog.is_null() {
        drop(Box::from_raw(prog));
    }
}

/// Pretty-printed source of a program without synthesis constructs, less
/// the template generators. The
/// string must be released with [`synrec_string_free`].
///
/// # Safety
/// `prog` must be a live program handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn synrec_program_print(prog: *const SynrecProgram, out: *mut *mut c_char) -> SynrecStatus {
    guard(|| {
        let (Some(p), false) = (prog.as_ref(), out.is_null()) else {
            return fail(SynrecStatus::NullArgument, "program or out is null");
        };
        // Expansion drops the library's generators, which never print.
        let ep = match expand_program(&p.0, &Default::default()) {
            Ok(ep) => ep,
            Err(e) => return from_error(e),
        };
        if !ep.control.is_empty() {
            return fail(SynrecStatus::NotConcrete, "the program contains synthesis constructs");
        }
        match pretty_print_program(&ep.program) {
            Ok(s) => {
                *out = cstring(s).into_raw();
                SynrecStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library for the caller to free.
#[no_mangle]
pub unsafe extern "C" fn synrec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs synthesis. Returns `Ok` when the run completed, whatever its
/// outcome; query the outcome with [`synrec_result_status`].
///
/// # Safety
/// `prog` and `cfg` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn synrec_synthesize(
    prog: *const SynrecProgram,
    cfg: *const SynrecConfig,
    out: *mut *mut SynrecResult,
) -> SynrecStatus {
    guard(|| {
        let (Some(p), Some(c), false) = (prog.as_ref(), cfg.as_ref(), out.is_null()) else {
            return fail(SynrecStatus::NullArgument, "program, config or out is null");
        };
        *out = ptr::null_mut();
        let (_, r) = match synthesize(&p.0, &c.0) {
            Ok(x) => x,
            Err(e) => return from_error(e),
        };
        let (status, solution) = match &r.status {
            Status::Solved { program, .. } => match pretty_print_program(program) {
                Ok(s) => (SynrecStatus::Ok, Some(cstring(s))),
                Err(e) => return from_error(e),
            },
            Status::Unsatisfiable(_) => (SynrecStatus::Unsatisfiable, None),
            Status::Timeout => (SynrecStatus::Timeout, None),
        };
        let stats = cstring(serde_json::to_string(&r.stats).expect("stats serialize"));
        *out = Box::into_raw(Box::new(SynrecResult { status, solution, stats }));
        SynrecStatus::Ok
    })
}

/// `Ok` when solved, otherwise `Unsatisfiable` or `Timeout`.
///
/// # Safety
/// `res` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_result_status(res: *const SynrecResult) -> SynrecStatus {
    match res.as_ref() {
        Some(r) => r.status,
        None => fail(SynrecStatus::NullArgument, "result is null"),
    }
}

/// Source text of the solution, or null when unsolved.
///
/// # Safety
/// `res` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_result_solution(res: *const SynrecResult) -> *const c_char {
    res.as_ref().and_then(|r| r.solution.as_ref()).map_or(ptr::null(), |s| s.as_ptr())
}

/// Statistics as a JSON document, or null for a null handle.
///
/// # Safety
/// `res` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_result_stats_json(res: *const SynrecResult) -> *const c_char {
    res.as_ref().map_or(ptr::null(), |r| r.stats.as_ptr())
}

/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn synrec_result_free(res: *mut SynrecResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Verifies a program without synthesis constructs on every input up to the
/// configured depth. On `CheckFailed`, `counterexample` (if not null)
/// receives the failing input, to be released with [`synrec_string_free`].
///
/// # Safety
/// `prog` and `cfg` must be live handles; `counterexample` null or writable.
#[no_mangle]
pub unsafe extern "C" fn synrec_check(
    prog: *const SynrecProgram,
    cfg: *const SynrecConfig,
    counterexample: *mut *mut c_char,
) -> SynrecStatus {
    guard(|| {
        let (Some(p), Some(c)) = (prog.as_ref(), cfg.as_ref()) else {
            return fail(SynrecStatus::NullArgument, "program or config is null");
        };
        if !counterexample.is_null() {
            *counterexample = ptr::null_mut();
        }
        let ep = match expand_program(&p.0, &c.0.expansion_context()) {
            Ok(ep) => ep,
            Err(e) => return from_error(e),
        };
        if !ep.control.is_empty() {
            return fail(SynrecStatus::NotConcrete, "the program contains synthesis constructs");
        }
        match verify(&ep, &ControlAssignment(vec![]), &c.0, None) {
            Ok(Verification::Pass) => SynrecStatus::Ok,
            Ok(Verification::Timeout) => fail(SynrecStatus::Timeout, "verification timed out"),
            Ok(Verification::Counterexample(x)) => {
                let layout = Layout::new(&ep.program);
                let shown = x.iter().map(|v| layout.show(v)).collect::<Vec<_>>().join(", ");
                set_error(format!("counterexample: {shown}"));
                if !counterexample.is_null() {
                    *counterexample = cstring(shown).into_raw();
                }
                SynrecStatus::CheckFailed
            }
            Err(e) => from_error(e),
        }
    })
}
