//! Continued-fraction primitives on (0, 1).
//!
//! Digits are 1-based (`a_1` is the first digit). Convergent states are
//! 0-based and start from `p_{-1} = 1, q_{-1} = 0, p_0 = 0, q_0 = 1`.
//!
//! `y_n` satisfies `y_n = a_n + 1/y_{n-1}` (the reversed continued fraction
//! `[a_n; a_{n-1}, ..., a_1]`). Note that `y_n < a_n + 1` fails exactly at
//! `n = 2` with `a_1 = 1`, where `y_2 = a_2 + 1`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bignum;
use crate::error::{Error, Result};

/// Largest digit any sampler or extractor will emit.
pub const MAX_DIGIT: u64 = (1u64 << 63) - 1;

/// Float digits are trusted while `q_n^2 · 2^-52` stays at or below this.
pub const HORIZON_TOLERANCE: f64 = 1e-3;

/// A continued-fraction digit, `1 ≤ a ≤ 2^63 - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Digit(u64);

impl Digit {
    pub const ONE: Digit = Digit(1);

    pub fn new(value: u64) -> Result<Digit> {
        if value == 0 {
            Err(Error::domain("digits are positive integers"))
        } else if value > MAX_DIGIT {
            Err(Error::DigitOverflow(value.to_string()))
        } else {
            Ok(Digit(value))
        }
    }

    /// Caller guarantees `1 ≤ value ≤ MAX_DIGIT`.
    pub(crate) fn new_unchecked(value: u64) -> Digit {
        debug_assert!((1..=MAX_DIGIT).contains(&value));
        Digit(value)
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl TryFrom<u64> for Digit {
    type Error = Error;
    fn try_from(v: u64) -> Result<Digit> {
        Digit::new(v)
    }
}

impl From<Digit> for u64 {
    fn from(d: Digit) -> u64 {
        d.0
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Build a digit vector from raw integers, rejecting zeros.
pub fn digits(values: &[u64]) -> Result<Vec<Digit>> {
    values.iter().map(|&v| Digit::new(v)).collect()
}

/// `τ(x) = 1/x - ⌊1/x⌋`, with `τ(0) = 0`.
pub fn gauss_map(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::domain(format!("gauss_map needs 0 <= x < 1, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let inv = 1.0 / x;
    Ok(inv - inv.floor())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalDigits {
    pub digits: Vec<Digit>,
    /// More than `max_n` digits exist; only the first `max_n` are returned.
    pub truncated: bool,
}

/// Digits of `num/den` by the Euclidean algorithm.
pub fn digits_of_rational(num: &BigUint, den: &BigUint, max_n: usize) -> Result<RationalDigits> {
    if num.is_zero() || den <= num {
        return Err(Error::domain(format!("need 0 < num < den, got {num}/{den}")));
    }
    let mut digits = Vec::new();
    let (mut a, mut b) = (den.clone(), num.clone());
    while !b.is_zero() {
        if digits.len() == max_n {
            return Ok(RationalDigits { digits, truncated: true });
        }
        let (q, r) = a.div_rem(&b);
        let q = q.to_u64().filter(|&v| v <= MAX_DIGIT).ok_or_else(|| Error::DigitOverflow(q.to_string()))?;
        digits.push(Digit(q));
        a = b;
        b = r;
    }
    Ok(RationalDigits { digits, truncated: false })
}

/// [`digits_of_rational`] for machine-size fractions.
pub fn digits_of_fraction(num: u64, den: u64, max_n: usize) -> Result<RationalDigits> {
    digits_of_rational(&BigUint::from(num), &BigUint::from(den), max_n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealDigits {
    pub digits: Vec<Digit>,
    /// Number of leading digits that are trusted.
    pub horizon: usize,
}

/// Digits of a float by iterating the Gauss map in floating point.
///
/// Stops early when the orbit hits 0 exactly or the next digit would not fit.
pub fn digits_of_real(x: f64, n: usize) -> Result<RealDigits> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("digits_of_real needs 0 < x < 1, got {x}")));
    }
    let mut digits = Vec::with_capacity(n);
    let mut horizon = 0;
    let (mut q_prev, mut q_cur) = (0.0f64, 1.0f64);
    let mut t = x;
    let eps = f64::EPSILON;
    while digits.len() < n && t > 0.0 {
        let inv = 1.0 / t;
        let a = inv.floor();
        if !(a >= 1.0 && a <= MAX_DIGIT as f64) {
            break;
        }
        let a = a as u64;
        digits.push(Digit(a.min(MAX_DIGIT)));
        let q_next = a as f64 * q_cur + q_prev;
        q_prev = q_cur;
        q_cur = q_next;
        if horizon == digits.len() - 1 && q_cur * q_cur * eps <= HORIZON_TOLERANCE {
            horizon = digits.len();
        }
        t = inv - inv.floor();
    }
    Ok(RealDigits { digits, horizon })
}

/// `(p_{n-1}, q_{n-1}, p_n, q_n)` after `n` digits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergentState {
    pub p_prev: BigUint,
    pub q_prev: BigUint,
    pub p_cur: BigUint,
    pub q_cur: BigUint,
    pub n: usize,
}

impl Default for ConvergentState {
    fn default() -> Self {
        Self::seed()
    }
}

impl ConvergentState {
    /// State before any digit: `p_{-1} = 1, q_{-1} = 0, p_0 = 0, q_0 = 1`.
    pub fn seed() -> Self {
        ConvergentState {
            p_prev: BigUint::one(),
            q_prev: BigUint::zero(),
            p_cur: BigUint::zero(),
            q_cur: BigUint::one(),
            n: 0,
        }
    }

    pub fn from_digits(ds: &[Digit]) -> Self {
        let mut s = Self::seed();
        for &d in ds {
            s.push(d);
        }
        s
    }

    /// In-place `p_{n+1} = a p_n + p_{n-1}`, likewise for `q`.
    pub fn push(&mut self, a: Digit) {
        let a = a.get();
        self.p_prev += &self.p_cur * a;
        self.q_prev += &self.q_cur * a;
        std::mem::swap(&mut self.p_prev, &mut self.p_cur);
        std::mem::swap(&mut self.q_prev, &mut self.q_cur);
        self.n += 1;
    }

    /// `q_n p_{n-1} - p_n q_{n-1}`.
    pub fn determinant(&self) -> BigInt {
        BigInt::from(&self.q_cur * &self.p_prev) - BigInt::from(&self.p_cur * &self.q_prev)
    }

    /// Exact check of the determinant identity `(-1)^n`.
    pub fn determinant_ok(&self) -> bool {
        let lhs = &self.q_cur * &self.p_prev;
        let rhs = &self.p_cur * &self.q_prev;
        if self.n.is_multiple_of(2) {
            lhs == rhs + 1u32
        } else {
            rhs == lhs + 1u32
        }
    }

    /// `p_n / q_n` as f64.
    pub fn value_f64(&self) -> f64 {
        bignum::ratio(&self.p_cur, &self.q_cur)
    }
}

/// Functional form of [`ConvergentState::push`].
pub fn push_digit(state: &ConvergentState, a: Digit) -> ConvergentState {
    let mut s = state.clone();
    s.push(a);
    s
}

/// All states `0..=digits.len()`; index `k` holds the state after `k` digits.
pub fn convergent_states(ds: &[Digit]) -> Vec<ConvergentState> {
    let mut out = Vec::with_capacity(ds.len() + 1);
    let mut s = ConvergentState::seed();
    out.push(s.clone());
    for &d in ds {
        s.push(d);
        out.push(s.clone());
    }
    out
}

/// A point `num/den` of (0, 1) held exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactPoint {
    pub num: BigUint,
    pub den: BigUint,
}

impl ExactPoint {
    pub fn new(num: BigUint, den: BigUint) -> Result<Self> {
        if num.is_zero() || den <= num {
            return Err(Error::domain("exact point must lie in (0, 1)"));
        }
        Ok(ExactPoint { num, den })
    }

    /// The dyadic rational a finite float in (0, 1) stands for.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::domain(format!("need 0 < x < 1, got {x}")));
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let num = BigUint::from(mant);
        let den = BigUint::one() << ((-e) as usize);
        let g = num.gcd(&den);
        Ok(ExactPoint { num: num / &g, den: den / g })
    }

    pub fn to_f64(&self) -> f64 {
        bignum::ratio(&self.num, &self.den)
    }

    pub fn digits(&self, max_n: usize) -> Result<RationalDigits> {
        digits_of_rational(&self.num, &self.den, max_n)
    }
}

/// `r_n`, `y_n`, `u_n` at one index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedVars {
    pub n: usize,
    pub digit: Digit,
    /// `1 / τ^{n-1}(x)`.
    pub r: f64,
    /// `q_n / q_{n-1}`.
    pub y: f64,
    /// `1 / (q_{n-1}^2 |x - p_{n-1}/q_{n-1}|)`.
    pub u: f64,
    pub reliable: bool,
}

/// Outcome of the exact sandwich checks at one index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Sandwich {
    /// `a_n ≤ r_n < a_n + 1`.
    pub r: bool,
    /// `a_n ≤ y_n ≤ a_n + 1`, with equality on the right only for `n = 2, a_1 = 1`.
    pub y: bool,
    /// `a_n < u_n < a_n + 2`.
    pub u: bool,
    /// `1/(q_{n-1}(q_n + q_{n-1})) < |x - p_{n-1}/q_{n-1}| < 1/(q_{n-1} q_n)`.
    pub bracket: bool,
}

impl Sandwich {
    pub fn all(&self) -> bool {
        self.r && self.y && self.u && self.bracket
    }
}

/// Pieces shared by [`derived_vars`] and [`sandwich`] at index `n ≥ 1`.
struct Local<'a> {
    a: u64,
    q1: &'a BigUint,
    q_n: &'a BigUint,
    /// `|X q_{n-1} - p_{n-1} D|`.
    e: BigUint,
    /// `|p_{n-2} D - X q_{n-2}|`.
    rn: BigUint,
}

fn local<'a>(x: &ExactPoint, ds: &[Digit], states: &'a [ConvergentState], n: usize) -> Result<Local<'a>> {
    if n == 0 || n > ds.len() || states.len() <= n {
        return Err(Error::domain(format!("index {n} outside the supplied prefix")));
    }
    let before = &states[n - 1];
    let signed = |a: BigUint, b: BigUint| if a >= b { a - b } else { b - a };
    let e = signed(&x.num * &before.q_cur, &before.p_cur * &x.den);
    let rn = signed(&before.p_prev * &x.den, &x.num * &before.q_prev);
    Ok(Local { a: ds[n - 1].get(), q1: &before.q_cur, q_n: &states[n].q_cur, e, rn })
}

/// Derived variables at indices `1..=ds.len()`, computed exactly from `x` and
/// converted to f64 at the last step. `states` comes from [`convergent_states`].
pub fn derived_vars(
    x: &ExactPoint,
    ds: &[Digit],
    states: &[ConvergentState],
    horizon: usize,
) -> Result<Vec<DerivedVars>> {
    let mut out = Vec::with_capacity(ds.len());
    for n in 1..=ds.len() {
        let l = local(x, ds, states, n)?;
        let (r, u) = if l.e.is_zero() {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (bignum::ratio(&l.rn, &l.e), bignum::ratio(&x.den, &(l.q1 * &l.e)))
        };
        out.push(DerivedVars { n, digit: ds[n - 1], r, y: bignum::ratio(l.q_n, l.q1), u, reliable: n <= horizon });
    }
    Ok(out)
}

/// Exact integer evaluation of the sandwich inequalities at index `n`.
pub fn sandwich(x: &ExactPoint, ds: &[Digit], states: &[ConvergentState], n: usize) -> Result<Sandwich> {
    let l = local(x, ds, states, n)?;
    let a = l.a;
    let d = &x.den;
    // r = rn / e
    let r = !l.e.is_zero() && &l.e * a <= l.rn && l.rn < &l.e * (a + 1);
    // y = q_n / q1
    let y_upper = match l.q_n.cmp(&(l.q1 * (a + 1))) {
        Ordering::Less => true,
        Ordering::Equal => n == 2 && ds[0].get() == 1,
        Ordering::Greater => false,
    };
    let y = l.q1 * a <= *l.q_n && y_upper;
    // u = D / (q1 e)
    let qe = l.q1 * &l.e;
    let u = !qe.is_zero() && &qe * a < *d && *d < &qe * (a + 2);
    // |x - p/q| = e / (D q1)
    let bracket = &l.e * (l.q_n + l.q1) > *d && &l.e * l.q_n < *d;
    Ok(Sandwich { r, y, u, bracket })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(v: &[u64]) -> Vec<Digit> {
        digits(v).unwrap()
    }

    // Independent oracle: plain u128 Euclid.
    fn euclid(mut num: u128, mut den: u128) -> Vec<u64> {
        let mut out = vec![];
        while num != 0 {
            out.push((den / num) as u64);
            let r = den % num;
            den = num;
            num = r;
        }
        out
    }

    fn evaluate(digits: &[Digit]) -> (BigUint, BigUint) {
        // Backward evaluation of [0; a_1, ..., a_n], independent of the recurrences.
        let (mut num, mut den) = (BigUint::zero(), BigUint::one());
        for d in digits.iter().rev() {
            let new_den = &den * d.get() + &num;
            num = den;
            den = new_den;
        }
        (num, den)
    }

    #[test]
    fn gauss_map_examples() {
        assert_eq!(gauss_map(0.0).unwrap(), 0.0);
        assert!((gauss_map(2.0 / 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(gauss_map(0.5).unwrap(), 0.0);
        assert!(gauss_map(1.0).is_err());
        assert!(gauss_map(-0.1).is_err());
    }

    #[test]
    fn rational_examples() {
        assert_eq!(digits_of_fraction(1, 2, 10).unwrap().digits, ds(&[2]));
        assert_eq!(digits_of_fraction(2, 3, 10).unwrap().digits, ds(&[1, 2]));
        assert_eq!(digits_of_fraction(113, 355, 10).unwrap().digits, ds(&[3, 7, 16]));
        assert_eq!(euclid(113, 355), vec![3, 7, 16]);
        assert_eq!(euclid(2, 3), vec![1, 2]);
        assert!(digits_of_fraction(3, 3, 10).is_err());
        assert!(digits_of_fraction(0, 3, 10).is_err());
        let t = digits_of_fraction(113, 355, 2).unwrap();
        assert!(t.truncated);
        assert_eq!(t.digits, ds(&[3, 7]));
        // not reduced: same digits
        assert_eq!(digits_of_fraction(226, 710, 10).unwrap().digits, ds(&[3, 7, 16]));
    }

    #[test]
    fn rational_digit_overflow() {
        let den = BigUint::one() << 64usize;
        assert!(matches!(digits_of_rational(&BigUint::one(), &den, 5), Err(Error::DigitOverflow(_))));
    }

    #[test]
    fn real_examples() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let r = digits_of_real(g, 10).unwrap();
        assert_eq!(r.digits, vec![Digit::ONE; 10]);
        assert_eq!(r.horizon, 10);

        let r = digits_of_real(0.5 - 1e-17, 3).unwrap();
        assert_eq!(r.digits[0].get(), 2);
        assert!(r.horizon <= 3);

        let r = digits_of_real(2f64.sqrt() - 1.0, 5).unwrap();
        assert_eq!(r.digits, ds(&[2, 2, 2, 2, 2]));
        // oracle: Pell convergents q_k^2 (p/q + 1)^2 - 2 q_k^2 = ±1
        let (p, q) = evaluate(&ds(&[2, 2, 2, 2, 2]));
        let s = BigInt::from(&p + &q);
        let q = BigInt::from(q);
        let pell = &s * &s - BigInt::from(2) * &q * &q;
        assert_eq!(pell.magnitude(), &BigUint::one());
    }

    #[test]
    fn real_horizon_is_finite_for_golden_ratio() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let r = digits_of_real(g, 60).unwrap();
        // q_n = F_{n+1}; F_31 = 1346269 <= sqrt(1e-3 * 2^52) < F_32 = 2178309
        assert_eq!(r.horizon, 30);
    }

    #[test]
    fn push_examples() {
        let s = ConvergentState::seed();
        assert!(s.determinant_ok());
        let mut qs = vec![];
        let mut t = s.clone();
        for _ in 0..5 {
            t = push_digit(&t, Digit::ONE);
            qs.push(t.q_cur.to_u64().unwrap());
        }
        assert_eq!(qs, vec![1, 2, 3, 5, 8]);
        let t = ConvergentState::from_digits(&ds(&[3, 7, 16]));
        assert_eq!((t.p_cur.to_u64().unwrap(), t.q_cur.to_u64().unwrap()), (113, 355));
    }

    #[test]
    fn pell_ratio_limit() {
        let x = 2f64.sqrt() - 1.0;
        let rd = digits_of_real(x, 20).unwrap();
        let p = ExactPoint::from_f64(x).unwrap();
        let states = convergent_states(&rd.digits);
        let dv = derived_vars(&p, &rd.digits, &states, rd.horizon).unwrap();
        let last = dv[rd.horizon - 1].y;
        assert!((last - (1.0 + 2f64.sqrt())).abs() < 1e-9, "{last}");
    }

    #[test]
    fn y_upper_equality_case() {
        // a_1 = 1 forces y_2 = a_2 + 1
        let d = ds(&[1, 3, 2]);
        let states = convergent_states(&d);
        let x = ExactPoint::new(BigUint::from(10u32), BigUint::from(13u32)).unwrap();
        let full = x.digits(10).unwrap().digits;
        assert_eq!(&full[..2], &d[..2]);
        let dv = derived_vars(&x, &d, &states, 3).unwrap();
        assert_eq!(dv[1].y, 4.0);
        assert!(sandwich(&x, &d, &states, 2).unwrap().y);
    }

    #[test]
    fn dyadic_is_exact() {
        let p = ExactPoint::from_f64(0.375).unwrap();
        assert_eq!((p.num.to_u64(), p.den.to_u64()), (Some(3), Some(8)));
        let p = ExactPoint::from_f64(f64::MIN_POSITIVE / 4.0).unwrap();
        assert_eq!(p.to_f64(), f64::MIN_POSITIVE / 4.0);
    }

    fn fib(n: usize) -> BigUint {
        let (mut a, mut b) = (BigUint::zero(), BigUint::one());
        for _ in 0..n {
            let c = &a + &b;
            a = b;
            b = c;
        }
        a
    }

    proptest! {
        #[test]
        fn determinant_alternates(v in prop::collection::vec(1u64..1_000_000, 0..80)) {
            let d = ds(&v);
            let mut s = ConvergentState::seed();
            for (k, &a) in d.iter().enumerate() {
                let before = s.determinant();
                s.push(a);
                prop_assert!(s.determinant_ok());
                prop_assert_eq!(s.determinant(), -before);
                prop_assert_eq!(s.n, k + 1);
                prop_assert!(s.q_cur > s.q_prev);
                prop_assert!(s.p_cur.gcd(&s.q_cur).is_one());
            }
        }

        #[test]
        fn q_dominates_fibonacci(v in prop::collection::vec(1u64..50, 1..120)) {
            let s = ConvergentState::from_digits(&ds(&v));
            prop_assert!(s.q_cur >= fib(v.len() + 1) || v.is_empty());
        }

        #[test]
        fn rational_round_trip(num in 1u128..u128::MAX / 2, extra in 1u128..u128::MAX / 2) {
            let den = num + extra;
            let r = digits_of_rational(&BigUint::from(num), &BigUint::from(den), 1000).unwrap();
            prop_assert!(!r.truncated);
            let raw: Vec<u64> = r.digits.iter().map(|d| d.get()).collect();
            prop_assert_eq!(&raw, &euclid(num, den));
            let s = ConvergentState::from_digits(&r.digits);
            // p_n/q_n = num/den exactly
            prop_assert_eq!(&s.p_cur * BigUint::from(den), &s.q_cur * BigUint::from(num));
            let (p, q) = evaluate(&r.digits);
            prop_assert_eq!((p, q), (s.p_cur.clone(), s.q_cur.clone()));
        }

        #[test]
        fn sandwich_holds_for_random_floats(x in 1e-6f64..(1.0 - 1e-6)) {
            let rd = digits_of_real(x, 40).unwrap();
            let p = ExactPoint::from_f64(x).unwrap();
            // exact digits of the dyadic x; the float prefix up to the horizon
            // agrees with them except in rare boundary cases
            let full = p.digits(rd.horizon).unwrap();
            let exact = full.digits;
            let states = convergent_states(&exact);
            let dv = derived_vars(&p, &exact, &states, exact.len()).unwrap();
            // the last digit of a terminating expansion sits on a cylinder endpoint
            let checked = if full.truncated { exact.len() } else { exact.len() - 1 };
            for n in 1..=checked {
                let s = sandwich(&p, &exact, &states, n).unwrap();
                prop_assert!(s.all(), "n={} {:?}", n, s);
                let a = exact[n - 1].get() as f64;
                let v = &dv[n - 1];
                prop_assert!(a <= v.r && v.r < a + 1.0 + 1e-9);
                prop_assert!(a < v.u && v.u < a + 2.0);
                // u_n = r_n + q_{n-2}/q_{n-1}
                let qq = bignum::ratio(&states[n - 1].q_prev, &states[n - 1].q_cur);
                prop_assert!((v.u - (v.r + qq)).abs() <= 1e-9 * v.u);
            }
        }

        #[test]
        fn y_recursion(v in prop::collection::vec(1u64..1000, 2..40)) {
            let d = ds(&v);
            let states = convergent_states(&d);
            let mut y_prev = bignum::ratio(&states[1].q_cur, &states[1].q_prev);
            prop_assert_eq!(y_prev, v[0] as f64);
            for n in 2..=v.len() {
                let y = bignum::ratio(&states[n].q_cur, &states[n].q_prev);
                let rec = v[n - 1] as f64 + 1.0 / y_prev;
                prop_assert!((y - rec).abs() <= 1e-12 * y);
                y_prev = y;
            }
        }

        #[test]
        fn gauss_map_stays_in_unit_interval(x in 0.0f64..1.0) {
            let t = gauss_map(x).unwrap();
            prop_assert!((0.0..1.0).contains(&t));
        }
    }
}
