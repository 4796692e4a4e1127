//! C ABI for orbitorsion.
//!
//! Presentations and representations are opaque heap handles created by the
//! `*_parse`/`*_corpus` functions and released with the matching `*_free`.
//! Every fallible call returns an [`OrbiStatus`]; on failure the message is
//! available from [`orbi_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use orbitorsion::cli::{self, RunConfig};
use orbitorsion::holonomy::HolonomyRep;
use orbitorsion::orbicryst::CheckedPresentation;
use orbitorsion::{corpus, io, locsym, orbicryst, torsion, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// malformed or inconsistent input (CLI exit code 2)
    Validation = 3,
    /// a computation failed or missed its tolerance (CLI exit code 3)
    Numerical = 4,
    Panic = 5,
}

pub struct OrbiPresentation(CheckedPresentation);

pub struct OrbiRep(HolonomyRep);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> OrbiStatus {
    let status = if cli::exit_code_for(&e) == cli::EXIT_VALIDATION { OrbiStatus::Validation } else { OrbiStatus::Numerical };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> OrbiStatus) -> OrbiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            OrbiStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, OrbiStatus> {
    if s.is_null() {
        set_error("null string argument".into());
        return Err(OrbiStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not UTF-8".into());
        OrbiStatus::InvalidUtf8
    })
}

unsafe fn handle<'a, T>(h: *const T) -> Result<&'a T, OrbiStatus> {
    h.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        OrbiStatus::NullPointer
    })
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! out {
    ($p:expr) => {
        if $p.is_null() {
            set_error("null output pointer".into());
            return OrbiStatus::NullPointer;
        }
    };
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn orbi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and validates a TOML presentation.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orbi_presentation_parse(toml: *const c_char, out: *mut *mut OrbiPresentation) -> OrbiStatus {
    guard(|| {
        out!(out);
        let s = tri!(text(toml));
        match io::parse_presentation(s).and_then(|p| orbicryst::validate_presentation(&p)) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(OrbiPresentation(p)));
                OrbiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Loads a bundled example presentation by name, e.g. "pillowcase".
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orbi_presentation_corpus(name: *const c_char, out: *mut *mut OrbiPresentation) -> OrbiStatus {
    guard(|| {
        out!(out);
        match corpus::presentation(tri!(text(name))) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(OrbiPresentation(p)));
                OrbiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `p` must be NULL or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn orbi_presentation_free(p: *mut OrbiPresentation) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension n of the quotient, or 0 for a NULL handle.
///
/// # Safety
/// `p` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn orbi_presentation_dimension(p: *const OrbiPresentation) -> usize {
    p.as_ref().map_or(0, |p| p.0.n)
}

/// Parses a JSON representation {rank, generators} and checks the relations.
///
/// # Safety
/// `p` must be a live handle, `json` a NUL-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orbi_rep_parse(p: *const OrbiPresentation, json: *const c_char, out: *mut *mut OrbiRep) -> OrbiStatus {
    guard(|| {
        out!(out);
        let p = tri!(handle(p));
        match io::parse_rep(&p.0, tri!(text(json))) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(OrbiRep(r)));
                OrbiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Trivial representation of the given rank.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orbi_rep_trivial(p: *const OrbiPresentation, rank: usize, out: *mut *mut OrbiRep) -> OrbiStatus {
    guard(|| {
        out!(out);
        let p = tri!(handle(p));
        if rank == 0 {
            set_error("rank must be positive".into());
            return OrbiStatus::Validation;
        }
        *out = Box::into_raw(Box::new(OrbiRep(HolonomyRep::trivial(&p.0, rank))));
        OrbiStatus::Ok
    })
}

/// Bundled representation `rep` of corpus case `case_name`.
///
/// # Safety
/// `p` must be a live handle, the strings NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn orbi_rep_corpus(
    p: *const OrbiPresentation,
    case_name: *const c_char,
    rep: *const c_char,
    out: *mut *mut OrbiRep,
) -> OrbiStatus {
    guard(|| {
        out!(out);
        let p = tri!(handle(p));
        match corpus::rep(&p.0, tri!(text(case_name)), tri!(text(rep))) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(OrbiRep(r)));
                OrbiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `r` must be NULL or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn orbi_rep_free(r: *mut OrbiRep) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// χ_top(Z, F) from Betti numbers and whether it equals the strata sum.
///
/// # Safety
/// Handles must be live and the output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn orbi_euler_check(
    p: *const OrbiPresentation,
    r: *const OrbiRep,
    chi_top: *mut i64,
    pass: *mut bool,
) -> OrbiStatus {
    guard(|| {
        out!(chi_top);
        out!(pass);
        let (p, r) = (tri!(handle(p)), tri!(handle(r)));
        match orbicryst::gauss_bonnet_check(&p.0, &r.0) {
            Ok(g) => {
                *chi_top = g.lhs;
                *pass = g.pass;
                OrbiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Analytic torsion T(F) of a flat or rank-one quotient.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn orbi_torsion(p: *const OrbiPresentation, r: *const OrbiRep, out: *mut f64) -> OrbiStatus {
    guard(|| {
        out!(out);
        let (p, r) = (tri!(handle(p)), tri!(handle(r)));
        match torsion::flat_torsion(&p.0, &r.0) {
            Ok(z) => {
                *out = z.torsion;
                OrbiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// log R_ρ(σ) from the closed-form product.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn orbi_ruelle_log(p: *const OrbiPresentation, r: *const OrbiRep, sigma: f64, out: *mut f64) -> OrbiStatus {
    guard(|| {
        out!(out);
        let (p, r) = (tri!(handle(p)), tri!(handle(r)));
        match locsym::ruelle_zeta(&p.0, &r.0) {
            Ok(z) => {
                *out = z.log_value(sigma);
                OrbiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Runs a named check ("euler-check", "torsion", "fried-check", ...) with
/// default options and returns its JSON report. The string must be released
/// with [`orbi_string_free`]. A check that runs but misses its tolerance
/// still returns `Ok`; inspect `pass` in the report.
///
/// # Safety
/// Handles must be live, `check` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn orbi_check_json(
    p: *const OrbiPresentation,
    r: *const OrbiRep,
    check: *const c_char,
    out: *mut *mut c_char,
) -> OrbiStatus {
    guard(|| {
        out!(out);
        let (p, r) = (tri!(handle(p)), tri!(handle(r)));
        let name = tri!(text(check));
        match cli::run_check(&RunConfig::defaults(), name, &p.0, &r.0) {
            Ok(o) => {
                *out = CString::new(cli::to_json(&o.report)).unwrap().into_raw();
                OrbiStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn orbi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
