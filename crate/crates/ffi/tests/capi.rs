use std::ffi::CStr;
use std::path::Path;
use std::ptr;

use echo_lab_ffi::*;

fn params(kick: f64, g_c: f64, sigma: f64) -> ElModelParams {
    ElModelParams { mu: 1.0, g_c, kick, period: 1.0, sigma }
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { el_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn model(n_atoms: u32, p: ElModelParams) -> *mut ElModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { el_model_new(n_atoms, &p, &mut m) }, ElStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn lifecycle_and_dimension() {
    let m = model(200, params(1.0, 0.2, 0.1));
    assert_eq!(unsafe { el_model_dim(m) }, 201);
    unsafe { el_model_free(m) };
    unsafe { el_model_free(ptr::null_mut()) };
    assert_eq!(unsafe { el_model_dim(ptr::null()) }, 0);
    let v = unsafe { CStr::from_ptr(el_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn spin_half_fidelity_matches_closed_form() {
    // N = 1: M(1) = cos²(σ) for any K, g
    let sigma = 0.37;
    let m = model(1, params(0.8, 0.3, sigma));
    let mut out = [0.0; 3];
    assert_eq!(unsafe { el_model_fidelity_curve(m, 1, 2, out.as_mut_ptr(), out.len()) }, ElStatus::Ok);
    assert_eq!(out[0], 1.0);
    assert!((out[1] - sigma.cos().powi(2)).abs() < 1e-12);
    unsafe { el_model_free(m) };
}

#[test]
fn echo_row_diagonal_equals_fidelity() {
    let m = model(20, params(2.0, 0.17, 0.5));
    let mut a = [0.0; 31];
    let mut b = [0.0; 31];
    unsafe {
        assert_eq!(el_model_fidelity_curve(m, -20, 30, a.as_mut_ptr(), 31), ElStatus::Ok);
        assert_eq!(el_model_echo_row(m, -20, -20, 30, b.as_mut_ptr(), 31), ElStatus::Ok);
        el_model_free(m);
    }
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn error_codes() {
    let mut m = ptr::null_mut();
    let bad = params(1.0, 0.2, -1.0);
    assert_eq!(unsafe { el_model_new(10, &bad, &mut m) }, ElStatus::InvalidArgument);
    assert!(last_error().contains("sigma"));
    assert_eq!(unsafe { el_model_new(0, &params(1.0, 0.2, 0.1), &mut m) }, ElStatus::InvalidArgument);
    assert_eq!(unsafe { el_model_new(10, ptr::null(), &mut m) }, ElStatus::NullPointer);
    assert!(m.is_null());

    let m = model(10, params(1.0, 0.2, 0.1));
    let mut out = [0.0; 4];
    assert_eq!(unsafe { el_model_fidelity_curve(m, 0, 10, out.as_mut_ptr(), 4) }, ElStatus::BufferTooSmall);
    assert!(last_error().contains("11"));
    // l = 5.5 is not on an integer ladder
    assert_eq!(unsafe { el_model_fidelity_curve(m, 11, 2, out.as_mut_ptr(), 4) }, ElStatus::InvalidArgument);
    assert_eq!(unsafe { el_model_fidelity_curve(ptr::null(), 0, 2, out.as_mut_ptr(), 4) }, ElStatus::NullPointer);
    assert_eq!(unsafe { el_model_fidelity_curve(m, 0, 2, ptr::null_mut(), 4) }, ElStatus::NullPointer);
    unsafe { el_model_free(m) };

    // success clears the message
    let mut p = 0.0;
    assert_eq!(unsafe { el_coherent_overlap(2, 1.0, 0, &mut p) }, ElStatus::Ok);
    assert_eq!(unsafe { el_last_error_message(ptr::null_mut(), 0) }, 0);
}

#[test]
fn truncated_error_message_is_terminated() {
    let mut p = 0.0;
    assert_eq!(unsafe { el_coherent_overlap(2, 4.0, 0, &mut p) }, ElStatus::InvalidArgument);
    let full = unsafe { el_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [1 as std::ffi::c_char; 8];
    assert_eq!(unsafe { el_last_error_message(buf.as_mut_ptr(), buf.len()) }, full);
    assert_eq!(buf[7], 0);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 7);
}

#[test]
fn coherent_overlap_equator() {
    let mut p = 0.0;
    for (l2, want) in [(-2, 0.25), (0, 0.5), (2, 0.25)] {
        assert_eq!(unsafe { el_coherent_overlap(2, std::f64::consts::FRAC_PI_2, l2, &mut p) }, ElStatus::Ok);
        assert!((p - want).abs() < 1e-15);
    }
}

#[test]
fn pattern_round_trip() {
    let mut pattern = vec![0.0; EL_PATTERN_LEN];
    let (re, im) = (0.3, -0.4);
    unsafe {
        assert_eq!(el_synthesize_pattern(1.0, re, im, 0.0, 0, pattern.as_mut_ptr(), pattern.len()), ElStatus::Ok);
    }
    let (mut mag, mut phase) = (0.0, 0.0);
    unsafe {
        assert_eq!(el_extract_fidelity(1.0, pattern.as_ptr(), pattern.len(), &mut mag, &mut phase), ElStatus::Ok);
    }
    assert!((mag - 0.5).abs() < 1e-10);
    assert!((phase - f64::atan2(im, re)).abs() < 1e-8);
    unsafe {
        assert_eq!(el_extract_fidelity(1.0, pattern.as_ptr(), 10, &mut mag, &mut phase), ElStatus::InvalidArgument);
        assert_eq!(el_synthesize_pattern(1.0, re, im, 0.0, 0, pattern.as_mut_ptr(), 10), ElStatus::BufferTooSmall);
    }
}

#[test]
fn calls_are_unwind_safe_from_threads() {
    let handles: Vec<_> = (0..4)
        .map(|i| {
            std::thread::spawn(move || {
                let mut p = 0.0;
                let status = unsafe { el_coherent_overlap(4, 0.5 * i as f64, 4, &mut p) };
                (status, p)
            })
        })
        .collect();
    for h in handles {
        let (status, p) = h.join().unwrap();
        assert_eq!(status, ElStatus::Ok);
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/echo_lab.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for symbol in [
        "el_last_error_message",
        "el_version",
        "el_model_new",
        "el_model_free",
        "el_model_dim",
        "el_model_fidelity_curve",
        "el_model_echo_row",
        "el_coherent_overlap",
        "el_synthesize_pattern",
        "el_extract_fidelity",
        "typedef struct ElModel ElModel",
        "EL_STATUS_BUFFER_TOO_SMALL = 4",
        "EL_STATUS_PANIC = 5",
    ] {
        assert!(text.contains(symbol), "missing {symbol}");
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/echo_lab.h");
    let status = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "cc rejected the header"),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}
