use std::ffi::{CStr, CString};
use std::ptr;

use orbitorsion_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = orbi_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn corpus(case: &str, rep: &str) -> (*mut OrbiPresentation, *mut OrbiRep) {
    let mut p = ptr::null_mut();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(orbi_presentation_corpus(c(case).as_ptr(), &mut p), OrbiStatus::Ok);
        assert_eq!(orbi_rep_corpus(p, c(case).as_ptr(), c(rep).as_ptr(), &mut r), OrbiStatus::Ok);
    }
    (p, r)
}

fn release(p: *mut OrbiPresentation, r: *mut OrbiRep) {
    unsafe {
        orbi_rep_free(r);
        orbi_presentation_free(p);
    }
}

#[test]
fn pillowcase_euler_characteristic() {
    let (p, r) = corpus("pillowcase", "trivial");
    let mut chi = 0i64;
    let mut pass = false;
    assert_eq!(unsafe { orbi_euler_check(p, r, &mut chi, &mut pass) }, OrbiStatus::Ok);
    assert_eq!(chi, 2);
    assert!(pass);
    assert_eq!(unsafe { orbi_presentation_dimension(p) }, 2);
    release(p, r);
}

#[test]
fn circle_torsion_and_ruelle() {
    let (p, r) = corpus("circle", "theta-pi");
    let mut t = 0.0;
    assert_eq!(unsafe { orbi_torsion(p, r, &mut t) }, OrbiStatus::Ok);
    assert!((t - 0.5).abs() < 1e-12);
    let mut log_r = 0.0;
    assert_eq!(unsafe { orbi_ruelle_log(p, r, 0.0, &mut log_r) }, OrbiStatus::Ok);
    assert!((log_r.exp() - t * t).abs() < 1e-12);
    release(p, r);
}

#[test]
fn parse_from_text() {
    let toml = "kind = \"flat\"\ndimension = 1\nlattice = [[\"1\"]]\ngram = [[\"1\"]]\n[[elements]]\nname = \"e\"\nlinear = [[1]]\nshift = [\"0\"]\n";
    let rep = r#"{"rank": 1, "generators": {"t1": [[[-1.0, 0.0]]]}}"#;
    let mut p = ptr::null_mut();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(orbi_presentation_parse(c(toml).as_ptr(), &mut p), OrbiStatus::Ok, "{}", last_error());
        assert_eq!(orbi_rep_parse(p, c(rep).as_ptr(), &mut r), OrbiStatus::Ok, "{}", last_error());
        let mut t = 0.0;
        assert_eq!(orbi_torsion(p, r, &mut t), OrbiStatus::Ok);
        assert!((t - 0.5).abs() < 1e-12);
    }
    release(p, r);
}

#[test]
fn check_json_report() {
    let (p, r) = corpus("pillowcase", "trivial");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { orbi_check_json(p, r, c("euler-check").as_ptr(), &mut s) }, OrbiStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { orbi_string_free(s) };
    assert!(text.contains("\"rhs\": \"2\""));
    assert!(text.contains("\"pass\": true"));

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { orbi_check_json(p, r, c("no-such-check").as_ptr(), &mut s) }, OrbiStatus::Validation);
    assert!(s.is_null());
    assert!(last_error().contains("no-such-check"));
    release(p, r);
}

#[test]
fn errors_are_reported() {
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(orbi_presentation_corpus(c("nowhere").as_ptr(), &mut p), OrbiStatus::Validation);
        assert!(p.is_null());
        assert!(last_error().contains("nowhere"));

        assert_eq!(orbi_presentation_corpus(ptr::null(), &mut p), OrbiStatus::NullPointer);
        assert_eq!(orbi_presentation_corpus(c("circle").as_ptr(), ptr::null_mut()), OrbiStatus::NullPointer);

        let bad = "kind = \"flat\"\ndimension = 1\nlattice = [[\"1\"]]\ngram = [[\"1\"]]\n[[elements]]\nname = \"r\"\nlinear = [[-1]]\nshift = [\"1/3\"]\n";
        assert_eq!(orbi_presentation_parse(c(bad).as_ptr(), &mut p), OrbiStatus::Validation);
        assert!(last_error().starts_with("NonClosedGroup"));

        let mut t = 0.0;
        assert_eq!(orbi_torsion(ptr::null(), ptr::null(), &mut t), OrbiStatus::NullPointer);

        // even-dimensional Ruelle zeta is rejected as invalid input
        let (p2, r2) = corpus("torus2", "twisted");
        assert_eq!(orbi_ruelle_log(p2, r2, 0.5, &mut t), OrbiStatus::Validation);
        release(p2, r2);
    }
}

#[test]
fn success_clears_last_error() {
    let mut p = ptr::null_mut();
    unsafe {
        orbi_presentation_corpus(c("nowhere").as_ptr(), &mut p);
        assert!(!orbi_last_error().is_null());
        assert_eq!(orbi_presentation_corpus(c("circle").as_ptr(), &mut p), OrbiStatus::Ok);
        assert!(orbi_last_error().is_null());
        orbi_presentation_free(p);
        orbi_presentation_free(ptr::null_mut());
    }
}

#[test]
fn trivial_rep_rank_checked() {
    let mut p = ptr::null_mut();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(orbi_presentation_corpus(c("torus3").as_ptr(), &mut p), OrbiStatus::Ok);
        assert_eq!(orbi_rep_trivial(p, 0, &mut r), OrbiStatus::Validation);
        assert_eq!(orbi_rep_trivial(p, 2, &mut r), OrbiStatus::Ok);
        let mut chi = 1;
        let mut pass = false;
        assert_eq!(orbi_euler_check(p, r, &mut chi, &mut pass), OrbiStatus::Ok);
        assert_eq!(chi, 0);
        assert!(pass);
    }
    release(p, r);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/orbitorsion.h")).unwrap();
    for f in [
        "orbi_last_error",
        "orbi_presentation_parse",
        "orbi_presentation_corpus",
        "orbi_presentation_free",
        "orbi_presentation_dimension",
        "orbi_rep_parse",
        "orbi_rep_trivial",
        "orbi_rep_corpus",
        "orbi_rep_free",
        "orbi_euler_check",
        "orbi_torsion",
        "orbi_ruelle_log",
        "orbi_check_json",
        "orbi_string_free",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct OrbiPresentation OrbiPresentation;"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/orbitorsion.h"))
        .output()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
