//! C ABI over the specrad library.
//!
//! Conventions:
//!
//! * every function returns a [`SpecradStatus`]; outputs go through pointers;
//! * exact integers are written as NUL-terminated decimal strings into a
//!   caller-supplied buffer (`written` reports the length excluding the NUL;
//!   on `SPECRAD_STATUS_BUFFER_TOO_SMALL` it reports the required length);
//! * profile state lives behind the opaque [`SpecradProfile`] handle, created
//!   by `specrad_profile_new_*` and released with `specrad_profile_free`;
//! * panics never cross the boundary (caught and mapped to a status).

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use specrad::bounds::{radius_bracket, verify_hypotheses, BoundProfile};
use specrad::operator::{growth_rate, iterate_norm, CompositionSystem};
use specrad::stern;
use specrad::thue_morse as tm;
use specrad::Error;

/// Status codes for every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecradStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DomainError = 3,
    CapacityExceeded = 4,
    NumericError = 5,
    Divergence = 6,
    BracketFailure = 7,
    BufferTooSmall = 8,
    InternalPanic = 9,
}

fn status_of(e: &Error) -> SpecradStatus {
    match e {
        Error::Domain { .. } => SpecradStatus::DomainError,
        Error::InvalidInput(_) | Error::WordShape(_) => SpecradStatus::InvalidInput,
        Error::Numeric { .. } => SpecradStatus::NumericError,
        Error::Capacity { .. } => SpecradStatus::CapacityExceeded,
        Error::Divergence { .. } => SpecradStatus::Divergence,
        Error::BracketFailure { .. } => SpecradStatus::BracketFailure,
    }
}

fn guarded(f: impl FnOnce() -> SpecradStatus) -> SpecradStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => SpecradStatus::InternalPanic,
    }
}

/// Writes `text` into `buf` as a NUL-terminated string.
///
/// # Safety
/// `buf` must point to `buf_len` writable bytes (or be null with
/// `buf_len == 0` to query the required size).
unsafe fn write_string(
    text: &str,
    buf: *mut c_char,
    buf_len: usize,
    written: *mut usize,
) -> SpecradStatus {
    if !written.is_null() {
        *written = text.len();
    }
    if buf.is_null() || buf_len < text.len() + 1 {
        return SpecradStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    SpecradStatus::Ok
}

macro_rules! out {
    ($ptr:expr, $value:expr) => {
        if $ptr.is_null() {
            return SpecradStatus::NullPointer;
        } else {
            *$ptr = $value;
        }
    };
}

/// Exact Thue-Morse moment `M_k(n)` as a decimal string.
///
/// # Safety
/// `buf` must point to `buf_len` writable bytes; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn specrad_tm_moment(
    k: u32,
    n: u32,
    cap: u64,
    buf: *mut c_char,
    buf_len: usize,
    written: *mut usize,
) -> SpecradStatus {
    guarded(|| match tm::tm_moment_exact(k, n, cap) {
        Ok(m) => write_string(&m.to_string(), buf, buf_len, written),
        Err(e) => status_of(&e),
    })
}

/// Aitken-accelerated growth estimate of the Thue-Morse moments.
///
/// # Safety
/// `estimate` and `error_band` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn specrad_tm_rho_estimate(
    k: u32,
    n_max: u32,
    cap: u64,
    estimate: *mut f64,
    error_band: *mut f64,
) -> SpecradStatus {
    guarded(|| match tm::rho_estimate(k, n_max, cap) {
        Ok((est, band)) => {
            out!(estimate, est);
            out!(error_band, band);
            SpecradStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// The sine-product constant, truncated below `precision`.
///
/// # Safety
/// `value` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn specrad_tm_delta1(precision: f64, value: *mut f64) -> SpecradStatus {
    guarded(|| {
        out!(value, tm::delta1_const(precision));
        SpecradStatus::Ok
    })
}

/// The product ratio `xi(x)` on [0, 1].
///
/// # Safety
/// `value` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn specrad_tm_xi(x: f64, precision: f64, value: *mut f64) -> SpecradStatus {
    guarded(|| {
        if !(0.0..=1.0).contains(&x) {
            return SpecradStatus::DomainError;
        }
        out!(value, tm::xi_eval(x, precision));
        SpecradStatus::Ok
    })
}

/// Exact Stern moment `M_tau(N)` as a decimal string.
///
/// # Safety
/// `buf` must point to `buf_len` writable bytes; `written` may be null.
#[no_mangle]
pub unsafe extern "C" fn specrad_stern_moment(
    tau: u32,
    level: u32,
    buf: *mut c_char,
    buf_len: usize,
    written: *mut usize,
) -> SpecradStatus {
    guarded(|| {
        let table = match stern::stern_values(level, stern::DEFAULT_LEVEL_CAP) {
            Ok(t) => t,
            Err(e) => return status_of(&e),
        };
        match table.moment(tau, level) {
            Ok(m) => write_string(&m.to_string(), buf, buf_len, written),
            Err(e) => status_of(&e),
        }
    })
}

/// Dominant eigenvalue of the exact Stern transfer matrix.
///
/// # Safety
/// `sigma` and `residual` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn specrad_stern_sigma(
    tau: u32,
    sigma: *mut f64,
    residual: *mut f64,
) -> SpecradStatus {
    guarded(|| match stern::sigma_eigen(tau, stern::DEFAULT_EIGEN_CAP) {
        Ok((s, r)) => {
            out!(sigma, s);
            out!(residual, r);
            SpecradStatus::Ok
        }
        Err(e) => status_of(&e),
    })
}

/// Exact moment/operator identity check at `(tau, level)`; writes 1 on pass.
///
/// # Safety
/// `pass` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn specrad_stern_identity_check(
    tau: u32,
    level: u32,
    pass: *mut u8,
) -> SpecradStatus {
    guarded(|| {
        let table = match stern::stern_values(level, stern::DEFAULT_LEVEL_CAP) {
            Ok(t) => t,
            Err(e) => return status_of(&e),
        };
        match stern::recurrence_identity_check(tau, level, &table) {
            Ok(check) => {
                out!(pass, check.pass as u8);
                SpecradStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Opaque handle: a composition system with its bound profile.
pub struct SpecradProfile {
    system: CompositionSystem,
    profile: BoundProfile,
}

unsafe fn profile_new(
    built: specrad::Result<(CompositionSystem, BoundProfile)>,
    out: *mut *mut SpecradProfile,
) -> SpecradStatus {
    if out.is_null() {
        return SpecradStatus::NullPointer;
    }
    match built {
        Ok((system, profile)) => {
            *out = Box::into_raw(Box::new(SpecradProfile { system, profile }));
            SpecradStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Builds the Thue-Morse profile at weight exponent `tau` (`tau >= 2`).
///
/// # Safety
/// `out` must be a valid writable pointer; the handle must be released with
/// [`specrad_profile_free`].
#[no_mangle]
pub unsafe extern "C" fn specrad_profile_new_tm(
    tau: u32,
    out: *mut *mut SpecradProfile,
) -> SpecradStatus {
    guarded(|| profile_new(tm::build_tm_profile(tau), out))
}

/// Builds the Stern profile at weight exponent `tau` (`tau >= 1`).
///
/// # Safety
/// `out` must be a valid writable pointer; the handle must be released with
/// [`specrad_profile_free`].
#[no_mangle]
pub unsafe extern "C" fn specrad_profile_new_stern(
    tau: u32,
    out: *mut *mut SpecradProfile,
) -> SpecradStatus {
    guarded(|| profile_new(stern::build_stern_profile(tau), out))
}

/// Releases a profile handle; null is a no-op.
///
/// # Safety
/// `handle` must come from `specrad_profile_new_*` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn specrad_profile_free(handle: *mut SpecradProfile) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Scalar profile data: `kappa0`, `eta`, `c1`, `c2` (any pointer may be null).
///
/// # Safety
/// Non-null pointers must be writable; `handle` must be a live profile.
#[no_mangle]
pub unsafe extern "C" fn specrad_profile_constants(
    handle: *const SpecradProfile,
    kappa0: *mut f64,
    eta: *mut f64,
    c1: *mut f64,
    c2: *mut f64,
) -> SpecradStatus {
    guarded(|| {
        let Some(p) = handle.as_ref() else {
            return SpecradStatus::NullPointer;
        };
        if !kappa0.is_null() {
            *kappa0 = p.profile.kappa0;
        }
        if !eta.is_null() {
            *eta = p.profile.eta;
        }
        if !c1.is_null() {
            *c1 = p.profile.c1;
        }
        if !c2.is_null() {
            *c2 = p.profile.c2;
        }
        SpecradStatus::Ok
    })
}

/// Certified radius bracket of the profile.
///
/// # Safety
/// `rho_lo` and `rho_hi` must be valid writable pointers; `handle` must be a
/// live profile.
#[no_mangle]
pub unsafe extern "C" fn specrad_profile_bracket(
    handle: *const SpecradProfile,
    rho_lo: *mut f64,
    rho_hi: *mut f64,
) -> SpecradStatus {
    guarded(|| {
        let Some(p) = handle.as_ref() else {
            return SpecradStatus::NullPointer;
        };
        match radius_bracket(&p.profile) {
            Ok(b) => {
                out!(rho_lo, b.rho_lo);
                out!(rho_hi, b.rho_hi);
                SpecradStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Growth-rate estimate from `r_max` iterate norms on a `grid_points` grid.
///
/// # Safety
/// `estimate` and `error_band` must be valid writable pointers; `handle`
/// must be a live profile.
#[no_mangle]
pub unsafe extern "C" fn specrad_profile_growth(
    handle: *const SpecradProfile,
    r_max: u32,
    grid_points: usize,
    estimate: *mut f64,
    error_band: *mut f64,
) -> SpecradStatus {
    guarded(|| {
        let Some(p) = handle.as_ref() else {
            return SpecradStatus::NullPointer;
        };
        let norms: specrad::Result<Vec<f64>> = (1..=r_max)
            .map(|r| iterate_norm(&p.system, r, grid_points))
            .collect();
        let norms = match norms {
            Ok(n) => n,
            Err(e) => return status_of(&e),
        };
        match growth_rate(&norms) {
            Ok((est, band)) => {
                out!(estimate, est);
                out!(error_band, band);
                SpecradStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Sweeps the orbit hypotheses; writes 1 when every family holds.
///
/// # Safety
/// `pass` must be a valid writable pointer; `handle` must be a live profile.
#[no_mangle]
pub unsafe extern "C" fn specrad_profile_verify(
    handle: *const SpecradProfile,
    samples: usize,
    k_max: u32,
    ell_max: u32,
    seed: u64,
    pass: *mut u8,
) -> SpecradStatus {
    guarded(|| {
        let Some(p) = handle.as_ref() else {
            return SpecradStatus::NullPointer;
        };
        match verify_hypotheses(&p.system, &p.profile, samples, k_max, ell_max, seed) {
            Ok(report) => {
                out!(pass, report.pass as u8);
                SpecradStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_covers_errors() {
        assert_eq!(
            status_of(&Error::Domain { x: 2.0, lo: 0.0, hi: 1.0 }),
            SpecradStatus::DomainError
        );
        assert_eq!(
            status_of(&Error::Capacity { what: "x", value: 2, cap: 1 }),
            SpecradStatus::CapacityExceeded
        );
    }
}
