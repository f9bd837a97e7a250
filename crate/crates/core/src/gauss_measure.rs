//! Closed-form Gauss measures.
//!
//! `γ` has density `1/((1+x) log 2)` on [0, 1]. `γ_a` is the one-parameter
//! family with distribution function `(a+1)x/(ax+1)`; `γ_0` is Lebesgue
//! measure, and `γ` itself is not a member of the family.
//!
//! Differences of `log(1+x)` are always evaluated as
//! `log1p((hi - lo)/(1 + lo))` with the ratio formed exactly.

use std::f64::consts::LN_2;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde::Serialize;

use crate::bignum;
use crate::cf_core::{ConvergentState, Digit};
use crate::error::{Error, Result};
use crate::zero_one::EventFamily;

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// `log(1+x)/log 2`.
pub fn gauss_cdf(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("gauss_cdf needs 0 <= x <= 1, got {x}")));
    }
    Ok(log2_1p(x))
}

/// `γ(a_n ≥ z) = log2(1 + 1/⌈z⌉)`. Every digit is at least 1, so `z ≤ 1` gives 1.
pub fn prob_digit_geq(z: f64) -> f64 {
    let c = z.ceil().max(1.0);
    log2_1p(1.0 / c)
}

/// `γ(a_n > z) = log2(1 + 1/(⌊z⌋ + 1))`.
pub fn prob_digit_gt(z: f64) -> f64 {
    let f = z.floor().max(0.0);
    log2_1p(1.0 / (f + 1.0))
}

/// `γ(a_n = k) = log2(1 + 1/(k(k+2)))`.
pub fn prob_digit_eq(k: Digit) -> f64 {
    let k = k.get() as f64;
    log2_1p(1.0 / (k * (k + 2.0)))
}

/// `γ(lo ≤ a_n ≤ hi) = log2(1 + (hi - lo + 1)/(lo (hi + 2)))`; 0 when `hi < lo`.
pub fn prob_digit_range(lo: u64, hi: u64) -> f64 {
    if hi < lo || lo == 0 {
        return 0.0;
    }
    let (l, h) = (lo as f64, hi as f64);
    log2_1p((hi - lo + 1) as f64 / (l * (h + 2.0)))
}

/// A digit event at one fixed index, with integer endpoints already resolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DigitEvent {
    /// `a ≥ b` (real `b`).
    Threshold { b: f64 },
    /// `a = d`.
    Equal { d: u64 },
    /// `d ≤ a ≤ d + m` with `m = ⌊d/c⌋`.
    ClosedBand { d: u64, m: u64 },
    /// `d < a ≤ d + m`, empty when `m = 0`.
    OpenBand { d: u64, m: u64 },
}

impl DigitEvent {
    pub fn contains(&self, a: Digit) -> bool {
        let a = a.get();
        match *self {
            DigitEvent::Threshold { b } => a as f64 >= b.ceil(),
            DigitEvent::Equal { d } => a == d,
            DigitEvent::ClosedBand { d, m } => a >= d && a <= d.saturating_add(m),
            DigitEvent::OpenBand { d, m } => a > d && a <= d.saturating_add(m),
        }
    }

    /// `γ` of the event.
    pub fn measure(&self) -> f64 {
        match *self {
            DigitEvent::Threshold { b } => prob_digit_geq(b),
            DigitEvent::Equal { d } => match Digit::new(d) {
                Ok(k) => prob_digit_eq(k),
                Err(_) => 0.0,
            },
            DigitEvent::ClosedBand { d, m } => {
                let (d, m) = (d as f64, m as f64);
                log2_1p((m + 1.0) / (d * (d + m + 2.0)))
            }
            DigitEvent::OpenBand { d, m } => {
                if m == 0 {
                    return 0.0;
                }
                let (d, m) = (d as f64, m as f64);
                log2_1p(m / ((d + 1.0) * (d + m + 2.0)))
            }
        }
    }

    /// The event is the whole space, so its measure is exactly 1.
    pub fn is_certain(&self) -> bool {
        matches!(*self, DigitEvent::Threshold { b } if b <= 1.0)
    }

    /// Whether the digit 1 belongs to the event.
    pub fn contains_one(&self) -> bool {
        self.contains(Digit::ONE)
    }
}

/// `γ(A_n)` for a family; 0 before the family's first index.
pub fn prob_event(family: &EventFamily, n: u64) -> Result<f64> {
    Ok(family.event(n)?.map_or(0.0, |e| e.measure()))
}

/// `(a+1)x/(ax+1)`.
pub fn gamma_a_cdf(a: f64, x: f64) -> f64 {
    (a + 1.0) * x / (a * x + 1.0)
}

/// `s ↦ 1/(s + a)`.
pub fn bbl_step(s: f64, a: Digit) -> f64 {
    1.0 / (s + a.get() as f64)
}

/// Conditional distribution function of `τ^n` given the digits, `(s+1)x/(sx+1)`.
pub fn bbl_conditional_cdf(s: f64, x: f64) -> f64 {
    gamma_a_cdf(s, x)
}

/// Natural-extension measure of `[0,x] × [0,y]`: `log2(1 + xy)`.
///
/// Integrating the density `1/((1+uv)^2 log 2)` in `v` first gives
/// `u ↦ y/((1+uy) log 2)`, whose integral over `[0, x]` is `log(1+xy)/log 2`.
pub fn extended_rect_measure(x: f64, y: f64) -> f64 {
    log2_1p(x * y)
}

/// Exact cylinder `{a_k = i_k, k ≤ n}`, an interval with convergent endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSpec {
    pub digits: Vec<Digit>,
    pub lo: BigRational,
    pub hi: BigRational,
    /// `+1` when `p_n/q_n` is the left endpoint (n even), `-1` otherwise.
    pub parity: i8,
}

/// Endpoints `p_n/q_n` and `(p_n + p_{n-1})/(q_n + q_{n-1})`, ordered by parity.
pub fn cylinder_from_state(state: &ConvergentState, digits: Vec<Digit>) -> CylinderSpec {
    let a = BigRational::new_raw(BigInt::from(state.p_cur.clone()), BigInt::from(state.q_cur.clone()));
    let b =
        BigRational::new_raw(BigInt::from(&state.p_cur + &state.p_prev), BigInt::from(&state.q_cur + &state.q_prev));
    if state.n.is_multiple_of(2) {
        CylinderSpec { digits, lo: a, hi: b, parity: 1 }
    } else {
        CylinderSpec { digits, lo: b, hi: a, parity: -1 }
    }
}

pub fn cylinder(digits: &[Digit]) -> Result<CylinderSpec> {
    if digits.is_empty() {
        return Err(Error::domain("cylinder needs at least one digit"));
    }
    let s = ConvergentState::from_digits(digits);
    Ok(cylinder_from_state(&s, digits.to_vec()))
}

/// `γ(I) = log2(1 + (hi - lo)/(1 + lo))`, with the ratio formed in integers.
pub fn cylinder_measure(spec: &CylinderSpec) -> f64 {
    // lo = a/b, hi = c/d: (hi - lo)/(1 + lo) = (cb - ad)/(d(a + b))
    let (a, b) = (spec.lo.numer(), spec.lo.denom());
    let (c, d) = (spec.hi.numer(), spec.hi.denom());
    let num = c * b - a * d;
    let den = d * (a + b);
    let (num, den): (BigUint, BigUint) = match (num.to_biguint(), den.to_biguint()) {
        (Some(n), Some(d)) => (n, d),
        _ => return 0.0,
    };
    log2_1p(bignum::ratio(&num, &den))
}

/// `γ(I(digits))`.
pub fn cylinder_measure_of(digits: &[Digit]) -> Result<f64> {
    Ok(cylinder_measure(&cylinder(digits)?))
}
