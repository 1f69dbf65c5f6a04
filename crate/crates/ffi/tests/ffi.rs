use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use csbp::tree_core::{to_text, PointedTree};
use csbp::{analytics, ModelParams};
use csbp_ffi::*;

fn params(beta: f64, theta: f64, alpha: f64) -> *mut CsbpParams {
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { csbp_params_new(beta, theta, alpha, &mut p) },
        CsbpStatus::Ok
    );
    p
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(csbp_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn two_leaves(a: f64, b: f64) -> CString {
    let mut t = PointedTree::root_only();
    let x = t.add_child(0, a);
    let y = t.add_child(0, b);
    t.set_pointed(vec![0, x, y]).unwrap();
    CString::new(to_text(&t)).unwrap()
}

#[test]
fn scalars_match_library() {
    let p = params(1.5, 0.3, 2.0);
    let q = ModelParams::new(1.5, 0.3, 2.0).unwrap();
    let mut out = 0.0;
    unsafe {
        assert_eq!(csbp_c_t(p, 0.7, &mut out), CsbpStatus::Ok);
        assert_eq!(out, analytics::c_t(&q, 0.7).unwrap());
        assert_eq!(csbp_u(p, 2.0, 0.7, &mut out), CsbpStatus::Ok);
        assert_eq!(out, analytics::u(&q, 2.0, 0.7).unwrap());
        assert_eq!(csbp_moment(p, 0.7, 2, &mut out), CsbpStatus::Ok);
        assert_eq!(out, analytics::moment_n(&q, 0.7, 2).unwrap());
        assert_eq!(
            csbp_limit_value(p, CsbpRegime::Kesten, 0.0, 1.0, 0.5, &mut out),
            CsbpStatus::Ok
        );
        assert!(out > 0.0 && out < 1.0);
        csbp_params_free(p);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut p = ptr::null_mut();
    let s = unsafe { csbp_params_new(-1.0, 0.0, 0.0, &mut p) };
    assert_eq!(s, CsbpStatus::Domain);
    assert!(p.is_null());
    assert!(last_error().contains("beta"));

    let p = params(1.0, 0.0, 0.0);
    unsafe {
        assert_eq!(csbp_c_t(p, 1.0, ptr::null_mut()), CsbpStatus::NullPointer);
        assert_eq!(
            csbp_c_t(ptr::null(), 1.0, &mut 0.0),
            CsbpStatus::NullPointer
        );
        assert_eq!(
            csbp_limit_value(p, CsbpRegime::High, 0.0, 1.0, 1.0, &mut 0.0),
            CsbpStatus::Unsupported
        );
        let bad = CString::new("not a tree").unwrap();
        let mut t = ptr::null_mut();
        assert_eq!(csbp_tree_from_text(bad.as_ptr(), &mut t), CsbpStatus::Parse);
        csbp_params_free(p);
    }
}

#[test]
fn sampling_is_reproducible() {
    let p = params(1.0, -0.4, 1.0);
    let draw = |seed| {
        let mut s = ptr::null_mut();
        let mut v = [0.0; 4];
        unsafe {
            assert_eq!(csbp_stream_new(seed, &mut s), CsbpStatus::Ok);
            assert_eq!(
                csbp_sample_transition(p, 1.0, 0.5, s, &mut v[0]),
                CsbpStatus::Ok
            );
            assert_eq!(csbp_sample_zalpha(p, 0.5, s, &mut v[1]), CsbpStatus::Ok);
            assert_eq!(csbp_sample_kesten(p, 0.5, s, &mut v[2]), CsbpStatus::Ok);
            assert_eq!(csbp_sample_decorated(p, 0.5, s, &mut v[3]), CsbpStatus::Ok);
            csbp_stream_free(s);
        }
        v
    };
    assert_eq!(draw(9), draw(9));
    assert_ne!(draw(9), draw(10));
    unsafe { csbp_params_free(p) };
}

#[test]
fn trees_round_trip_and_compare() {
    let a_txt = two_leaves(1.0, 2.0);
    let b_txt = two_leaves(1.0, 2.5);
    unsafe {
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(csbp_tree_from_text(a_txt.as_ptr(), &mut a), CsbpStatus::Ok);
        assert_eq!(csbp_tree_from_text(b_txt.as_ptr(), &mut b), CsbpStatus::Ok);
        let (mut n, mut len) = (0usize, 0.0);
        assert_eq!(csbp_tree_info(a, &mut n, &mut len), CsbpStatus::Ok);
        assert_eq!(n, 2);
        assert!((len - 3.0).abs() < 1e-12);

        let mut s = ptr::null_mut();
        assert_eq!(csbp_tree_to_text(a, &mut s), CsbpStatus::Ok);
        assert_eq!(CStr::from_ptr(s), a_txt.as_c_str());
        csbp_string_free(s);

        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(csbp_gh_bounds(a, a, &mut lo, &mut hi), CsbpStatus::Ok);
        assert_eq!((lo, hi), (0.0, 0.0));
        assert_eq!(csbp_gh_bounds(a, b, &mut lo, &mut hi), CsbpStatus::Ok);
        assert!(lo > 0.0 && lo <= hi);

        let mut c = ptr::null_mut();
        assert_eq!(csbp_tree_canonical(b, &mut c), CsbpStatus::Ok);
        assert_eq!(csbp_gh_bounds(b, c, &mut lo, &mut hi), CsbpStatus::Ok);
        assert!(hi < 1e-9);
        for t in [a, b, c] {
            csbp_tree_free(t);
        }
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/csbp.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "CSBP_STATUS_OK = 0",
        "typedef struct CsbpParams CsbpParams;",
        "csbp_last_error(void)",
        "csbp_c_t(",
        "csbp_conditional_laplace(",
        "csbp_sample_decorated(",
        "csbp_gh_bounds(",
        "csbp_tree_free(",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "csbp.h"
int main(void) {
    CsbpParams *p = NULL;
    double c = 0.0;
    if (csbp_params_new(1.0, 0.0, 0.0, &p) != CSBP_STATUS_OK) return 2;
    if (csbp_c_t(p, 2.0, &c) != CSBP_STATUS_OK) return 3;
    if (csbp_c_t(p, -1.0, &c) != CSBP_STATUS_DOMAIN || csbp_last_error() == NULL) return 4;
    csbp_params_free(p);
    printf("%.17g\n", c);
    return 0;
}
"#;

/// Builds a C program against the header and static library when a C
/// compiler and the archive are both present.
#[test]
fn c_program_links() {
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let archive = lib_dir.join("libcsbp_ffi.a");
    if !archive.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C toolchain or static library");
        return;
    }
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = dir.join("ffi_smoke.c");
    let bin = dir.join("ffi_smoke");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&archive)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let c: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((c - 0.5).abs() < 1e-15);
}
