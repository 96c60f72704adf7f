//! C ABI for soficlab.
//!
//! Every function returns a [`SoficlabStatus`]. On failure the message is
//! kept per thread and read with [`soficlab_last_error_message`]. Handles
//! are opaque and released with their `_free` function.
//!
//! Words are arrays of `int32_t` letters: `g + 1` for generator `g` and
//! `-(g + 1)` for its inverse.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use soficlab::groups::{ProductWord, ReducedWord};
use soficlab::report::RunReport;
use soficlab::sofic::{build_sigma, commutator_defect, Approximation, HammingMode, Sigma};
use soficlab::suites::{self, Mode, SuiteOptions};
use soficlab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoficlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Generation = 3,
    Resource = 4,
    Unsupported = 5,
    Io = 6,
    Format = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SoficlabStatus {
    match e {
        Error::InvalidArgument(_) | Error::ModulusMismatch { .. } | Error::OutOfRange { .. } | Error::Precondition(_) => {
            SoficlabStatus::InvalidArgument
        }
        Error::Generation { .. } => SoficlabStatus::Generation,
        Error::Resource(_) => SoficlabStatus::Resource,
        Error::Unsupported(_) => SoficlabStatus::Unsupported,
        Error::Io(_) => SoficlabStatus::Io,
        Error::Format(_) | Error::Json(_) => SoficlabStatus::Format,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SoficlabStatus, String)>) -> SoficlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SoficlabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SoficlabStatus::Internal
        }
    }
}

fn lift<T>(r: soficlab::Result<T>) -> Result<T, (SoficlabStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SoficlabStatus, String) {
    (SoficlabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn word(letters: *const i32, len: usize) -> Result<ReducedWord, (SoficlabStatus, String)> {
    if len == 0 {
        return Ok(ReducedWord::identity());
    }
    if letters.is_null() {
        return Err(null("word"));
    }
    let raw = std::slice::from_raw_parts(letters, len);
    let mut powers = Vec::with_capacity(len);
    for &l in raw {
        let g = l
            .unsigned_abs()
            .checked_sub(1)
            .filter(|&g| g <= u16::MAX as u32)
            .ok_or((SoficlabStatus::InvalidArgument, format!("letter {l} is not a generator code")))?;
        powers.push((g as u16, l.signum()));
    }
    Ok(ReducedWord::from_powers(&powers))
}

/// Length in bytes of the last error message on this thread, without the
/// terminating NUL.
#[no_mangle]
pub extern "C" fn soficlab_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` as a NUL-terminated string,
/// truncating to `cap - 1` bytes. Returns the number of bytes written.
///
/// # Safety
/// `buf` must be valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn soficlab_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    if buf.is_null() || cap == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let n = msg.len().min(cap - 1);
        std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
        *buf.add(n) = 0;
        n
    })
}

/// The sofic approximation σ_p of Σ × Λ on G_p.
pub struct SoficlabSigma(Sigma);

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn soficlab_sigma_new(p: u32, m: u32, k: u32, out: *mut *mut SoficlabSigma) -> SoficlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = lift(build_sigma(p, m, k))?;
        *out = Box::into_raw(Box::new(SoficlabSigma(s)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from `soficlab_sigma_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn soficlab_sigma_free(h: *mut SoficlabSigma) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// |G_p|; fails with `Unsupported` above 2^64.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn soficlab_sigma_domain_size(h: *const SoficlabSigma, out: *mut u64) -> SoficlabStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = h.0.hom.domain_size();
        *out = u64::try_from(n).map_err(|_| (SoficlabStatus::Unsupported, format!("domain size {n} exceeds 64 bits")))?;
        Ok(())
    })
}

/// Image of point `x` under σ_p(g, h).
///
/// # Safety
/// `h` and `out` must be valid; each word pointer must be valid for its length.
#[no_mangle]
pub unsafe extern "C" fn soficlab_sigma_apply(
    h: *const SoficlabSigma,
    left: *const i32,
    left_len: usize,
    right: *const i32,
    right_len: usize,
    x: u64,
    out: *mut u64,
) -> SoficlabStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let w = ProductWord::new(word(left, left_len)?, word(right, right_len)?);
        lift(h.0.hom.check_word(&w))?;
        if x as u128 >= h.0.hom.domain_size() {
            return Err((SoficlabStatus::InvalidArgument, format!("point {x} is outside the domain")));
        }
        *out = h.0.hom.apply(&w, x as u128) as u64;
        Ok(())
    })
}

/// d_H(σ(g,e)σ(e,h), σ(e,h)σ(g,e)). Exact when `samples` is 0, otherwise
/// sampled with a 99% Hoeffding radius written to `radius`.
///
/// # Safety
/// Pointers must be valid; each word pointer must be valid for its length.
#[no_mangle]
pub unsafe extern "C" fn soficlab_sigma_commutator_defect(
    h: *const SoficlabSigma,
    left: *const i32,
    left_len: usize,
    right: *const i32,
    right_len: usize,
    samples: u64,
    seed: u64,
    value: *mut f64,
    radius: *mut f64,
) -> SoficlabStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(|| null("handle"))?;
        if value.is_null() || radius.is_null() {
            return Err(null("output"));
        }
        let u = ProductWord::left_only(word(left, left_len)?);
        let v = ProductWord::right_only(word(right, right_len)?);
        lift(h.0.hom.check_word(&u))?;
        lift(h.0.hom.check_word(&v))?;
        let mode = if samples == 0 { HammingMode::Exact } else { HammingMode::sampled(samples, seed) };
        let e = lift(commutator_defect(&h.0.hom, &u, &v, &mode))?;
        *value = e.value;
        *radius = e.radius;
        Ok(())
    })
}

/// Result of a verification suite.
pub struct SoficlabReport(RunReport);

/// Runs a named suite. `samples == 0` selects exact mode.
///
/// # Safety
/// `suite` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn soficlab_verify(
    suite: *const c_char,
    p: u32,
    m: u32,
    k: u32,
    seed: u64,
    samples: u64,
    out: *mut *mut SoficlabReport,
) -> SoficlabStatus {
    guard(|| {
        if suite.is_null() {
            return Err(null("suite"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let name = CStr::from_ptr(suite).to_str().map_err(|_| (SoficlabStatus::InvalidArgument, "suite is not UTF-8".to_string()))?;
        let mode = if samples == 0 { Mode::Exact } else { Mode::Sampled };
        let opts = SuiteOptions { p, m, k, seed, samples, mode };
        let checks = lift(suites::run_suite(name, &opts))?;
        let params = soficlab::report::Parameters {
            p: Some(p),
            m,
            k,
            r_p: Some(soficlab::algebra::next_prime(p as u64) as u32),
            seed,
            samples: (samples > 0).then_some(samples),
            mode: if samples == 0 { "exact" } else { "sampled" }.into(),
            primes: vec![],
        };
        *out = Box::into_raw(Box::new(SoficlabReport(RunReport::new(&format!("verify {name}"), params, checks))));
        Ok(())
    })
}

/// # Safety
/// `r` must come from `soficlab_verify` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn soficlab_report_free(r: *mut SoficlabReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// 1 if every check passed, 0 otherwise, -1 for a null handle.
///
/// # Safety
/// `r` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn soficlab_report_all_pass(r: *const SoficlabReport) -> i32 {
    r.as_ref().map_or(-1, |r| r.0.all_pass as i32)
}

/// # Safety
/// `r` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn soficlab_report_check_count(r: *const SoficlabReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.checks.len())
}

/// Writes the report JSON with a terminating NUL. `needed` receives the
/// required capacity; a short buffer yields `BufferTooSmall`.
///
/// # Safety
/// `r` and `needed` must be valid; `buf` must be valid for `cap` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn soficlab_report_json(
    r: *const SoficlabReport,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> SoficlabStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("handle"))?;
        if needed.is_null() {
            return Err(null("needed"));
        }
        let json = lift(r.0.to_json())?;
        *needed = json.len() + 1;
        if buf.is_null() || cap < json.len() + 1 {
            return Err((SoficlabStatus::BufferTooSmall, format!("report needs {} bytes", json.len() + 1)));
        }
        std::ptr::copy_nonoverlapping(json.as_ptr(), buf as *mut u8, json.len());
        *buf.add(json.len()) = 0;
        Ok(())
    })
}

/// |S_p| / 3^p, exact count rounded to double.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn soficlab_sp_density(p: u32, out: *mut f64) -> SoficlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = lift(soficlab::f3vectors::sp_count_exact(p))?;
        *out = soficlab::f3vectors::big_ratio(&s, &soficlab::f3vectors::ap_order(p));
        Ok(())
    })
}

/// |S_p △ (v + S_p)| / 3^p, the boundary of `T_p` under its worst ρ-generator.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn soficlab_boundary_ratio(p: u32, out: *mut f64) -> SoficlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let specs = lift(soficlab::groups::construct_hom_specs(p, 5, 3))?;
        *out = lift(soficlab::spectral::rho_boundary(&specs))?.ratio;
        Ok(())
    })
}
