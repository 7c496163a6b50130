//! Exercises the C entry points exactly as a foreign caller would: through
//! raw pointers and status codes.

use std::ffi::{c_char, CStr};
use std::ptr;

use specrad_capi::*;

fn read_string(buf: &[c_char]) -> String {
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string()
}

#[test]
fn tm_moment_decimal_string() {
    let mut buf = [0 as c_char; 64];
    let mut written = 0usize;
    let status = unsafe {
        specrad_tm_moment(2, 2, 1 << 22, buf.as_mut_ptr(), buf.len(), &mut written)
    };
    assert_eq!(status, SpecradStatus::Ok);
    assert_eq!(written, 2);
    assert_eq!(read_string(&buf), "28");
}

#[test]
fn tm_moment_buffer_query() {
    // 2^20 has 7 digits; a null buffer queries the needed size
    let mut written = 0usize;
    let status = unsafe { specrad_tm_moment(1, 20, 1 << 22, ptr::null_mut(), 0, &mut written) };
    assert_eq!(status, SpecradStatus::BufferTooSmall);
    assert_eq!(written, 7);
    let mut buf = [0 as c_char; 8];
    let status = unsafe {
        specrad_tm_moment(1, 20, 1 << 22, buf.as_mut_ptr(), buf.len(), &mut written)
    };
    assert_eq!(status, SpecradStatus::Ok);
    assert_eq!(read_string(&buf), (1u64 << 20).to_string());
}

#[test]
fn tm_moment_cap_is_reported() {
    let mut buf = [0 as c_char; 8];
    let status = unsafe {
        specrad_tm_moment(1, 30, 1 << 22, buf.as_mut_ptr(), buf.len(), ptr::null_mut())
    };
    assert_eq!(status, SpecradStatus::CapacityExceeded);
}

#[test]
fn stern_sigma_one_is_three() {
    let (mut sigma, mut residual) = (0.0f64, 1.0f64);
    let status = unsafe { specrad_stern_sigma(1, &mut sigma, &mut residual) };
    assert_eq!(status, SpecradStatus::Ok);
    assert!((sigma - 3.0).abs() < 1e-12);
    assert!(residual < 1e-13);
}

#[test]
fn stern_moment_and_identity() {
    let mut buf = [0 as c_char; 64];
    let status = unsafe {
        specrad_stern_moment(2, 2, buf.as_mut_ptr(), buf.len(), ptr::null_mut())
    };
    assert_eq!(status, SpecradStatus::Ok);
    assert_eq!(read_string(&buf), "23");

    let mut pass = 0u8;
    let status = unsafe { specrad_stern_identity_check(3, 8, &mut pass) };
    assert_eq!(status, SpecradStatus::Ok);
    assert_eq!(pass, 1);
}

#[test]
fn constants_and_domain_errors() {
    let mut v = 0.0f64;
    assert_eq!(unsafe { specrad_tm_delta1(1e-10, &mut v) }, SpecradStatus::Ok);
    assert!((v - 0.6027).abs() < 5e-4);
    assert_eq!(unsafe { specrad_tm_xi(2.0 / 3.0, 1e-12, &mut v) }, SpecradStatus::Ok);
    assert!((v - 0.60270032).abs() < 1e-7);
    assert_eq!(unsafe { specrad_tm_xi(1.5, 1e-12, &mut v) }, SpecradStatus::DomainError);
    assert_eq!(unsafe { specrad_tm_delta1(1e-10, ptr::null_mut()) }, SpecradStatus::NullPointer);
}

#[test]
fn profile_lifecycle_and_bracket() {
    let mut handle: *mut SpecradProfile = ptr::null_mut();
    let status = unsafe { specrad_profile_new_stern(8, &mut handle) };
    assert_eq!(status, SpecradStatus::Ok);
    assert!(!handle.is_null());

    let (mut kappa0, mut eta) = (0.0f64, 0.0f64);
    let status = unsafe {
        specrad_profile_constants(handle, &mut kappa0, &mut eta, ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(status, SpecradStatus::Ok);
    assert!((kappa0 - (2.0 / 5.0f64.sqrt()).powi(8)).abs() < 1e-14);
    assert!(eta > 0.0);

    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    let status = unsafe { specrad_profile_bracket(handle, &mut lo, &mut hi) };
    assert_eq!(status, SpecradStatus::Ok);
    assert!(0.0 < lo && lo <= hi && hi < 1.0);

    let (mut growth, mut band) = (0.0f64, 0.0f64);
    let status = unsafe { specrad_profile_growth(handle, 12, 17, &mut growth, &mut band) };
    assert_eq!(status, SpecradStatus::Ok);
    let inv = 1.0 / growth;
    assert!(lo <= inv && inv <= hi);

    let mut pass = 0u8;
    let status = unsafe { specrad_profile_verify(handle, 1000, 8, 8, 0, &mut pass) };
    assert_eq!(status, SpecradStatus::Ok);
    assert_eq!(pass, 1);

    unsafe { specrad_profile_free(handle) };
    unsafe { specrad_profile_free(ptr::null_mut()) };
}

#[test]
fn invalid_tau_is_reported() {
    let mut handle: *mut SpecradProfile = ptr::null_mut();
    let status = unsafe { specrad_profile_new_tm(1, &mut handle) };
    assert_eq!(status, SpecradStatus::InvalidInput);
    assert!(handle.is_null());
    assert_eq!(
        unsafe { specrad_profile_bracket(ptr::null(), ptr::null_mut(), ptr::null_mut()) },
        SpecradStatus::NullPointer
    );
}
