//! C interface to `cf-limits-lab`.
//!
//! Every fallible call returns a [`CfStatus`]; on failure the message is kept
//! per thread and can be read with [`cf_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cf_limits_lab::cf_core::{digits_of_fraction, Digit};
use cf_limits_lab::clt_lab::clt_constants;
use cf_limits_lab::digit_sampler::{sample_trajectory, DigitStream, SampleMode, SeedSpec};
use cf_limits_lab::gauss_measure;
use cf_limits_lab::mixing_lab::MixingConstants;
use cf_limits_lab::zero_one::{series_verdict, CriterionVariant, EventFamily, Method, VerdictKind};
use cf_limits_lab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Parse = 4,
    Config = 5,
    Precondition = 6,
    DigitOverflow = 7,
    BeyondHorizon = 8,
    Io = 9,
    Json = 10,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 11,
    /// The sampler has produced all of its digits.
    Exhausted = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfVerdictKind {
    InfinitelyOften = 0,
    FinitelyOften = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfVariant {
    ZeroOne = 0,
    Clt = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfMethod {
    PartialSum = 0,
    IntegralTest = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfConstants {
    /// phi(1)
    pub eta: f64,
    /// psi(1) = 2 log 2 - 1
    pub psi1: f64,
    pub theta: f64,
    pub rho_prime: f64,
    pub rho: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfVerdict {
    pub kind: CfVerdictKind,
    /// Upper bound on the series, NaN when none was certified.
    pub total_bound: f64,
    /// log10 of a divergence witness index, NaN when none.
    pub witness_log10: f64,
}

/// Opaque digit sampler.
pub struct CfSampler {
    stream: DigitStream,
}

/// Opaque event family.
pub struct CfEventFamily {
    family: EventFamily,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CfStatus {
    match e {
        Error::Domain(_) => CfStatus::Domain,
        Error::Parse { .. } => CfStatus::Parse,
        Error::Config(_) => CfStatus::Config,
        Error::Precondition(_) => CfStatus::Precondition,
        Error::DigitOverflow(_) => CfStatus::DigitOverflow,
        Error::BeyondHorizon { .. } => CfStatus::BeyondHorizon,
        Error::Io(_) => CfStatus::Io,
        Error::Json(_) => CfStatus::Json,
    }
}

fn fail(status: CfStatus, msg: impl Into<String>) -> CfStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording errors and turning panics into `CfStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), CfStatus>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(CfStatus::Panic, "internal panic"),
    }
}

fn lib(e: Error) -> CfStatus {
    fail(status_of(&e), e.to_string())
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, CfStatus> {
    p.as_mut().ok_or_else(|| fail(CfStatus::NullPointer, "null output pointer"))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, CfStatus> {
    if p.is_null() {
        return Err(fail(CfStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(CfStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `log2(1 + x)` for `0 <= x <= 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_gauss_cdf(x: f64, out: *mut f64) -> CfStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = gauss_measure::gauss_cdf(x).map_err(lib)?;
        Ok(())
    })
}

/// `γ(a_n = k)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_prob_digit_eq(k: u64, out: *mut f64) -> CfStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = gauss_measure::prob_digit_eq(Digit::new(k).map_err(lib)?);
        Ok(())
    })
}

/// `γ(a_n ≥ z)`; 1 for `z ≤ 1`.
#[no_mangle]
pub extern "C" fn cf_prob_digit_geq(z: f64) -> f64 {
    gauss_measure::prob_digit_geq(z)
}

/// `γ(lo ≤ a_n ≤ hi)`.
#[no_mangle]
pub extern "C" fn cf_prob_digit_range(lo: u64, hi: u64) -> f64 {
    gauss_measure::prob_digit_range(lo, hi)
}

/// `γ̄([0, x] × [0, y])` on the natural extension.
#[no_mangle]
pub extern "C" fn cf_extended_rect_measure(x: f64, y: f64) -> f64 {
    gauss_measure::extended_rect_measure(x, y)
}

/// Digits of `num/den` in (0, 1). Writes at most `cap` digits to `out` and the
/// full count to `out_len`; returns `BufferTooSmall` when `cap` is short.
///
/// # Safety
/// `out` must be valid for `cap` writes (may be null when `cap` is 0), `out_len` for one.
#[no_mangle]
pub unsafe extern "C" fn cf_digits_of_rational(
    num: u64,
    den: u64,
    out: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> CfStatus {
    guard(|| {
        let out_len = out_ref(out_len)?;
        // 64-bit fractions have fewer than 100 digits
        let rd = digits_of_fraction(num, den, 128).map_err(lib)?;
        *out_len = rd.digits.len();
        if rd.digits.len() > cap {
            return Err(fail(CfStatus::BufferTooSmall, format!("need room for {} digits", rd.digits.len())));
        }
        if !rd.digits.is_empty() && out.is_null() {
            return Err(fail(CfStatus::NullPointer, "null digit buffer"));
        }
        for (i, d) in rd.digits.iter().enumerate() {
            *out.add(i) = d.get();
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_constants(out: *mut CfConstants) -> CfStatus {
    guard(|| {
        let out = out_ref(out)?;
        let m = MixingConstants::new();
        *out =
            CfConstants { eta: m.eta, psi1: m.psi1, theta: m.theta, rho_prime: m.rho_prime, rho: clt_constants().rho };
        Ok(())
    })
}

/// New sampler for `length` digits of trajectory `(master, index)`.
/// `mode` is one of `exact`, `mixture`, `float`, `hp:BITS`, `gamma:A`, `luroth`.
///
/// # Safety
/// `mode` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_sampler_new(
    mode: *const c_char,
    master: u64,
    index: u64,
    length: usize,
    out: *mut *mut CfSampler,
) -> CfStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let mode: SampleMode = str_arg(mode)?.parse().map_err(lib)?;
        let stream = sample_trajectory(SeedSpec::new(master, index), length, mode).map_err(lib)?;
        *out = Box::into_raw(Box::new(CfSampler { stream }));
        Ok(())
    })
}

/// Next digit, or `Exhausted` after `length` digits.
///
/// # Safety
/// `s` must come from `cf_sampler_new`; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_sampler_next(s: *mut CfSampler, out: *mut u64) -> CfStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| fail(CfStatus::NullPointer, "null sampler"))?;
        let out = out_ref(out)?;
        match s.stream.next() {
            Some(d) => {
                *out = d.get();
                Ok(())
            }
            None => Err(fail(CfStatus::Exhausted, "sampler exhausted")),
        }
    })
}

/// # Safety
/// `s` must be null or come from `cf_sampler_new`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_sampler_free(s: *mut CfSampler) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Family from JSON, e.g. `{"kind":"threshold","b":"n"}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_family_from_json(json: *const c_char, out: *mut *mut CfEventFamily) -> CfStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let family = EventFamily::from_json(str_arg(json)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(CfEventFamily { family }));
        Ok(())
    })
}

/// Registered family by name, e.g. `sqrt-nlogn-equal`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_family_preset(name: *const c_char, out: *mut *mut CfEventFamily) -> CfStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let family = EventFamily::preset(str_arg(name)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(CfEventFamily { family }));
        Ok(())
    })
}

unsafe fn family_ref<'a>(f: *const CfEventFamily) -> Result<&'a EventFamily, CfStatus> {
    f.as_ref().map(|f| &f.family).ok_or_else(|| fail(CfStatus::NullPointer, "null family"))
}

/// `γ(A_n)`.
///
/// # Safety
/// `f` must come from a family constructor; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_family_prob(f: *const CfEventFamily, n: u64, out: *mut f64) -> CfStatus {
    guard(|| {
        let fam = family_ref(f)?;
        let out = out_ref(out)?;
        *out = fam.prob(n).map_err(lib)?;
        Ok(())
    })
}

/// Whether digit `a` at index `n` lies in `A_n`.
///
/// # Safety
/// `f` must come from a family constructor; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_family_contains(f: *const CfEventFamily, n: u64, a: u64, out: *mut bool) -> CfStatus {
    guard(|| {
        let fam = family_ref(f)?;
        let out = out_ref(out)?;
        *out = fam.contains(n, Digit::new(a).map_err(lib)?).map_err(lib)?;
        Ok(())
    })
}

/// # Safety
/// `f` must be null or come from a family constructor, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_family_free(f: *mut CfEventFamily) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Series verdict for the family; `horizon` must be at least 1000.
/// `variant` takes a `CfVariant` value and `method` a `CfMethod` value.
///
/// # Safety
/// `f` must come from a family constructor; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cf_series_verdict(
    f: *const CfEventFamily,
    variant: u32,
    horizon: u64,
    method: u32,
    out: *mut CfVerdict,
) -> CfStatus {
    guard(|| {
        let fam = family_ref(f)?;
        let out = out_ref(out)?;
        let variant = match variant {
            v if v == CfVariant::ZeroOne as u32 => CriterionVariant::ZeroOne,
            v if v == CfVariant::Clt as u32 => CriterionVariant::Clt,
            v => return Err(fail(CfStatus::Config, format!("unknown variant {v}"))),
        };
        let method = match method {
            m if m == CfMethod::PartialSum as u32 => Method::PartialSum,
            m if m == CfMethod::IntegralTest as u32 => Method::IntegralTest,
            m => return Err(fail(CfStatus::Config, format!("unknown method {m}"))),
        };
        let v = series_verdict(fam, variant, horizon, method).map_err(lib)?;
        *out = CfVerdict {
            kind: match v.verdict {
                VerdictKind::AsInfinitelyOften => CfVerdictKind::InfinitelyOften,
                VerdictKind::AsFinitelyOften => CfVerdictKind::FinitelyOften,
                VerdictKind::Inconclusive => CfVerdictKind::Inconclusive,
            },
            total_bound: v.evidence.total_bound.unwrap_or(f64::NAN),
            witness_log10: v.evidence.divergence_witness_log10.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
