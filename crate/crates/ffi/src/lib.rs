//! C interface to `cfelab`.
//!
//! Every fallible function returns a [`CfelabStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`cfelab_last_error`] on the same thread until the next failing call.
//! Objects are opaque handles created by `*_new` and released by `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cfelab::arith::{dual_residue, Modulus};
use cfelab::cfe::{cfe_digits, cfe_len, ReducedFraction};
use cfelab::crosssec::kappa_quadrature;
use cfelab::gaussmeasure::digit_probability;
use cfelab::lattice::OrbitTracker;
use cfelab::stats::len_stats;
use cfelab::zaremba::{enumerate_bounded, exponent_fit, Rule, ZarembaCensus};
use cfelab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfelabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    Overflow = 4,
    InsufficientData = 5,
    InvariantViolation = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

pub struct CfelabModulus(Modulus);

pub struct CfelabOrbit(OrbitTracker);

pub struct CfelabCensus(ZarembaCensus);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CfelabLenStats {
    pub q: u64,
    pub phi: u64,
    pub mean_len: f64,
    pub var_len: f64,
    /// `mean_len / (2 ln q)`.
    pub heilbronn_ratio: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CfelabOrbitSample {
    pub t: f64,
    pub height: f64,
    pub x: f64,
    pub y: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CfelabStatus {
    match e {
        Error::OutOfRange(_) | Error::OutsideHypothesis { .. } => CfelabStatus::OutOfRange,
        Error::Overflow(_) => CfelabStatus::Overflow,
        Error::InsufficientData(_) => CfelabStatus::InsufficientData,
        Error::InvariantViolation(_) | Error::DomainViolation(_) | Error::IterationCap(_) => {
            CfelabStatus::InvariantViolation
        }
        _ => CfelabStatus::InvalidArgument,
    }
}

enum Fail {
    Lib(Error),
    Status(CfelabStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CfelabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfelabStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            CfelabStatus::Internal
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail::Status(CfelabStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail::Status(CfelabStatus::NullPointer, "handle is null".into()))
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn cfelab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Crate version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cfelab_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    V.as_ptr()
}

/// # Safety
/// `out_handle` must be null or point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn cfelab_modulus_new(q: u64, out_handle: *mut *mut CfelabModulus) -> CfelabStatus {
    guard(|| {
        let o = out(out_handle, "out_handle")?;
        *o = ptr::null_mut();
        *o = Box::into_raw(Box::new(CfelabModulus(Modulus::new(q)?)));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`cfelab_modulus_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfelab_modulus_free(h: *mut CfelabModulus) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle and `phi` writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_modulus_phi(h: *const CfelabModulus, phi: *mut u64) -> CfelabStatus {
    guard(|| {
        *out(phi, "phi")? = handle(h)?.0.euler_phi();
        Ok(())
    })
}

/// Number of distinct prime factors.
///
/// # Safety
/// `h` must be a live handle and `omega` writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_modulus_omega(h: *const CfelabModulus, omega: *mut u32) -> CfelabStatus {
    guard(|| {
        *out(omega, "omega")? = handle(h)?.0.omega();
        Ok(())
    })
}

/// `p'` with `p p' = -1 (mod q)`.
///
/// # Safety
/// `h` must be a live handle and `dual` writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_modulus_dual_residue(h: *const CfelabModulus, p: u64, dual: *mut u64) -> CfelabStatus {
    guard(|| {
        *out(dual, "dual")? = dual_residue(p, &handle(h)?.0)?;
        Ok(())
    })
}

/// Canonical digits of `p/q`. Writes the digit count to `len`; fails with
/// `BufferTooSmall` when it exceeds `cap`, leaving `buf` untouched.
///
/// # Safety
/// `buf` must hold `cap` values (it may be null when `cap` is 0) and `len`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_cfe_digits(p: u64, q: u64, buf: *mut u64, cap: usize, len: *mut usize) -> CfelabStatus {
    guard(|| {
        let len = out(len, "len")?;
        let w = cfe_digits(ReducedFraction::new(p, q)?);
        *len = w.len();
        if w.len() > cap {
            return Err(Fail::Status(CfelabStatus::BufferTooSmall, format!("need {} digits, have {cap}", w.len())));
        }
        if buf.is_null() {
            return Err(Fail::Status(CfelabStatus::NullPointer, "buf is null".into()));
        }
        std::slice::from_raw_parts_mut(buf, w.len()).copy_from_slice(w.digits());
        Ok(())
    })
}

/// # Safety
/// `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_cfe_len(p: u64, q: u64, len: *mut usize) -> CfelabStatus {
    guard(|| {
        *out(len, "len")? = cfe_len(ReducedFraction::new(p, q)?);
        Ok(())
    })
}

/// Gauss measure of the first digit being `k` (0 for `k = 0`).
#[no_mangle]
pub extern "C" fn cfelab_digit_probability(k: u64) -> f64 {
    digit_probability(k)
}

/// Section normalization by quadrature.
#[no_mangle]
pub extern "C" fn cfelab_kappa() -> f64 {
    kappa_quadrature()
}

/// Length statistics over all `p` coprime to `q`.
///
/// # Safety
/// `stats` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_len_stats(q: u64, stats: *mut CfelabLenStats) -> CfelabStatus {
    guard(|| {
        let o = out(stats, "stats")?;
        let s = len_stats(&Modulus::new(q)?)?;
        *o = CfelabLenStats {
            q: s.q,
            phi: s.phi,
            mean_len: s.mean_len,
            var_len: s.var_len,
            heilbronn_ratio: s.heilbronn_ratio,
        };
        Ok(())
    })
}

/// # Safety
/// `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_orbit_new(p: u64, q: u64, out_handle: *mut *mut CfelabOrbit) -> CfelabStatus {
    guard(|| {
        let o = out(out_handle, "out_handle")?;
        *o = ptr::null_mut();
        *o = Box::into_raw(Box::new(CfelabOrbit(OrbitTracker::new(ReducedFraction::new(p, q)?))));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`cfelab_orbit_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfelab_orbit_free(h: *mut CfelabOrbit) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Height and fundamental-domain point of the orbit at time `t`.
///
/// # Safety
/// `h` must be a live handle, not used concurrently, and `sample` writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_orbit_sample(h: *mut CfelabOrbit, t: f64, sample: *mut CfelabOrbitSample) -> CfelabStatus {
    guard(|| {
        let o = out(sample, "sample")?;
        let tracker = h.as_mut().ok_or_else(|| Fail::Status(CfelabStatus::NullPointer, "handle is null".into()))?;
        let s = tracker.0.sample(t)?;
        *o = CfelabOrbitSample { t: s.t, height: s.height, x: s.fd_point.0, y: s.fd_point.1 };
        Ok(())
    })
}

/// Bounded-digit census for `q <= qmax`, digits at most `k`.
///
/// # Safety
/// `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_census_new(qmax: u64, k: u64, out_handle: *mut *mut CfelabCensus) -> CfelabStatus {
    guard(|| {
        let o = out(out_handle, "out_handle")?;
        *o = ptr::null_mut();
        *o = Box::into_raw(Box::new(CfelabCensus(enumerate_bounded(qmax, k)?)));
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`cfelab_census_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfelab_census_free(h: *mut CfelabCensus) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

fn rule(strict: bool) -> Rule {
    if strict {
        Rule::Strict
    } else {
        Rule::Relaxed
    }
}

/// Members for denominator `q`; 0 beyond the census cap. With `strict`
/// every digit is at most `k`, otherwise the last may be `k + 1`.
///
/// # Safety
/// `h` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_census_count(h: *const CfelabCensus, q: u64, strict: bool, count: *mut u32) -> CfelabStatus {
    guard(|| {
        *out(count, "count")? = handle(h)?.0.count(q, rule(strict));
        Ok(())
    })
}

/// Growth exponent fitted over dyadic windows.
///
/// # Safety
/// `h` must be a live handle and `exponent` writable.
#[no_mangle]
pub unsafe extern "C" fn cfelab_census_exponent(h: *const CfelabCensus, strict: bool, exponent: *mut f64) -> CfelabStatus {
    guard(|| {
        *out(exponent, "exponent")? = exponent_fit(&handle(h)?.0, rule(strict))?.exponent;
        Ok(())
    })
}
