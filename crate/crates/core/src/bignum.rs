//! Float views of big integers that never overflow the f64 exponent range.

use num_bigint::BigUint;

/// `x ≈ m · 2^e` with `m < 2^64` holding the leading bits of `x`.
#[inline]
pub(crate) fn split(x: &BigUint) -> (f64, i64) {
    let mut it = x.iter_u64_digits();
    let len = it.len();
    match len {
        0 => (0.0, 0),
        1 => (it.next().unwrap_or(0) as f64, 0),
        _ => {
            let hi = it.next_back().unwrap_or(0);
            let lo = it.next_back().unwrap_or(0);
            let lz = hi.leading_zeros();
            let m = if lz == 0 { hi } else { (hi << lz) | (lo >> (64 - lz)) };
            (m as f64, 64 * (len as i64 - 1) - lz as i64)
        }
    }
}

/// `x · 2^e` without intermediate overflow.
#[inline]
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// `num / den` as f64, relative error a few ulps.
#[inline]
pub(crate) fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    let (mn, en) = split(num);
    let (md, ed) = split(den);
    ldexp(mn / md, en - ed)
}

/// `x · 2^(-shift)`.
#[inline]
pub(crate) fn scaled(x: &BigUint, shift: i64) -> f64 {
    let (m, e) = split(x);
    ldexp(m, e - shift)
}

/// Bit length used as a common scale for a group of numbers.
#[inline]
pub(crate) fn scale_of(x: &BigUint) -> i64 {
    x.bits() as i64 - 64
}
