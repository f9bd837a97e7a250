//! Dependence coefficients of the continued-fraction digit process.
//!
//! `f(a, x) = γ_a([0,x]) − γ([0,x])` drives `φ(1)`. Its `x`-derivative
//! vanishes at the two roots of `a²x² + (2a − (a+1)log 2)x + 1 − (a+1)log 2`,
//! and the sup over sets is the positive variation of `f(a, ·)`.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};

use crate::cf_core::Digit;
use crate::digit_sampler::{ChainState, SeedSpec};
use crate::error::{Error, Result};
use crate::gauss_measure::prob_digit_range;
use crate::stats::Moments;

/// Published upper bound for the contraction constant; the true constant is slightly smaller.
pub const THETA: f64 = 0.30367;

/// `(1 − log 2 + log log 2)/log 2`. Negative as written; `φ(1)` is its magnitude.
pub fn eta_signed() -> f64 {
    (1.0 - LN_2 + LN_2.ln()) / LN_2
}

/// `φ(1) = |1 − log 2 + log log 2| / log 2 ≈ 0.0860713`.
pub fn eta_exact() -> f64 {
    eta_signed().abs()
}

/// `π² log 2 / 6 − 1`.
pub fn rho_prime() -> f64 {
    PI * PI * LN_2 / 6.0 - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixingConstants {
    pub eta: f64,
    pub eta_signed: f64,
    pub psi1: f64,
    pub theta: f64,
    pub rho_prime: f64,
}

impl MixingConstants {
    pub fn new() -> Self {
        MixingConstants {
            eta: eta_exact(),
            eta_signed: eta_signed(),
            psi1: 2.0 * LN_2 - 1.0,
            theta: THETA,
            rho_prime: rho_prime(),
        }
    }
}

impl Default for MixingConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// Upper bound on `ψ(n)`: `2 log 2 − 1` at 1, `ρ' θ^(n−2)` after.
pub fn psi_bound(n: u32) -> f64 {
    match n {
        0 => f64::NAN,
        1 => 2.0 * LN_2 - 1.0,
        _ => rho_prime() * THETA.powi(n as i32 - 2),
    }
}

/// Upper bound on `φ(n)`: sharp `η` at 1, `ψ(n)/2` after.
pub fn phi_bound(n: u32) -> f64 {
    match n {
        0 => f64::NAN,
        1 => eta_exact(),
        _ => psi_bound(n) / 2.0,
    }
}

pub fn f_discrepancy(a: f64, x: f64) -> f64 {
    (a + 1.0) * x / (a * x + 1.0) - x.ln_1p() / LN_2
}

/// `∂f/∂x`.
pub fn f_dx(a: f64, x: f64) -> f64 {
    (a + 1.0) / (a * x + 1.0).powi(2) - 1.0 / (LN_2 * (1.0 + x))
}

/// `∂f/∂a = x(1−x)/(ax+1)²`.
pub fn f_da(a: f64, x: f64) -> f64 {
    x * (1.0 - x) / (a * x + 1.0).powi(2)
}

/// Lower edge of the two-zero regime, `2 log 2 − 1`.
pub fn a_low() -> f64 {
    2.0 * LN_2 - 1.0
}

/// Upper edge of the two-zero regime, `1/log 2 − 1`.
pub fn a_high() -> f64 {
    1.0 / LN_2 - 1.0
}

/// Raw roots `(x_{a,1}, x_{a,2})` of `∂f/∂x`, larger first.
///
/// With `B = ((a+1)log 2 − 2a)/2` and `c = 1 − (a+1)log 2` the roots are
/// `(B ± √(B² − a²c))/a²`; the smaller one is written as `c/(B + √(B² − a²c))`,
/// which is finite at `a = 0` and avoids the cancellation.
fn raw_zeros(a: f64) -> (f64, f64) {
    let b = ((a + 1.0) * LN_2 - 2.0 * a) / 2.0;
    let c = 1.0 - (a + 1.0) * LN_2;
    let s = b + (b * b - a * a * c).max(0.0).sqrt();
    let x1 = if a == 0.0 { f64::INFINITY } else { s / (a * a) };
    (x1, c / s)
}

/// Zeros of `∂f/∂x` that lie in `[0, 1]`.
pub fn f_zeros(a: f64) -> Result<(Option<f64>, Option<f64>)> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::domain(format!("a = {a} is outside [0, 1]")));
    }
    let (x1, x2) = raw_zeros(a);
    let x1 = (a >= a_low()).then(|| x1.clamp(0.0, 1.0));
    let x2 = (a <= a_high()).then(|| x2.clamp(0.0, 1.0));
    Ok((x1, x2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `0 ≤ a < 2 log 2 − 1`: only `x_{a,2}`.
    Low,
    /// `2 log 2 − 1 ≤ a ≤ 1/log 2 − 1`: both zeros.
    Middle,
    /// `1/log 2 − 1 < a ≤ 1`: only `x_{a,1}`.
    High,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyProfile {
    pub a: f64,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
    pub regime: Regime,
    /// Set minimising `γ_a(B) − γ(B)`, as closed intervals.
    pub min_set: Vec<(f64, f64)>,
    /// `min_B γ_a(B) − γ(B) ≤ 0`.
    pub signed: f64,
    pub magnitude: f64,
    /// The middle-regime bound `2 f(2 log 2 − 1, x_{2 log 2 − 1, 2})`.
    pub regime_bound: Option<f64>,
}

pub fn extremal_discrepancy(a: f64) -> Result<DiscrepancyProfile> {
    let (x1, x2) = f_zeros(a)?;
    let (regime, min_set, signed) = match (x1, x2) {
        (None, Some(x2)) => (Regime::Low, vec![(0.0, x2)], f_discrepancy(a, x2)),
        (Some(x1), None) => (Regime::High, vec![(x1, 1.0)], -f_discrepancy(a, x1)),
        (Some(x1), Some(x2)) => {
            (Regime::Middle, vec![(0.0, x2), (x1, 1.0)], f_discrepancy(a, x2) - f_discrepancy(a, x1))
        }
        (None, None) => unreachable!("the regimes cover [0, 1]"),
    };
    let regime_bound = (regime == Regime::Middle).then(middle_regime_bound);
    Ok(DiscrepancyProfile {
        a,
        x1,
        x2,
        regime,
        min_set,
        signed: signed.min(0.0),
        magnitude: -signed.min(0.0),
        regime_bound,
    })
}

/// `2 f(2 log 2 − 1, x_{2 log 2 − 1, 2})`, the lower bound over the middle regime.
pub fn middle_regime_bound() -> f64 {
    let a = a_low();
    2.0 * f_discrepancy(a, raw_zeros(a).1)
}

/// Profiles on `grid` equally spaced values of `a` in `[0, 1]`.
pub fn profile_scan(grid: usize) -> Result<Vec<DiscrepancyProfile>> {
    if grid < 2 {
        return Err(Error::domain("profile grid needs at least 2 points"));
    }
    (0..grid).into_par_iter().map(|i| extremal_discrepancy(i as f64 / (grid - 1) as f64)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaNumeric {
    pub value: f64,
    pub argmax_a: f64,
    pub grid_a: usize,
    pub grid_x: usize,
}

/// Positive variation of `f(a, ·)` by the trapezoid rule on `∂f/∂x`,
/// splitting each sign-changing cell at the interpolated crossing.
fn positive_variation(a: f64, grid_x: usize) -> f64 {
    let h = 1.0 / (grid_x - 1) as f64;
    let mut total = 0.0;
    let mut x0 = 0.0;
    let mut g0 = f_dx(a, 0.0);
    for j in 1..grid_x {
        let x1 = j as f64 * h;
        let g1 = f_dx(a, x1);
        if g0 >= 0.0 && g1 >= 0.0 {
            total += 0.5 * (g0 + g1) * h;
        } else if g0 > 0.0 || g1 > 0.0 {
            let t = g0 / (g0 - g1);
            total += if g0 > 0.0 { 0.5 * g0 * t * h } else { 0.5 * g1 * (1.0 - t) * h };
        }
        x0 = x1;
        g0 = g1;
    }
    debug_assert!((x0 - 1.0).abs() < 1e-12);
    total
}

/// `sup_a ∫ (∂f/∂x)⁺ dx` by brute force, independent of the closed-form zeros.
pub fn eta_numeric(grid_a: usize, grid_x: usize) -> Result<EtaNumeric> {
    if grid_a < 2 || grid_x < 2 {
        return Err(Error::domain("eta_numeric grids need at least 2 points"));
    }
    let best = (0..grid_a)
        .into_par_iter()
        .map(|i| {
            let a = i as f64 / (grid_a - 1) as f64;
            (positive_variation(a, grid_x), a)
        })
        .reduce(|| (f64::NEG_INFINITY, 0.0), |p, q| if q.0 > p.0 || (q.0 == p.0 && q.1 < p.1) { q } else { p });
    Ok(EtaNumeric { value: best.0, argmax_a: best.1, grid_a, grid_x })
}

/// A set of consecutive digit values `lo ≤ a < hi`; `hi = None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DigitRange {
    pub lo: u64,
    pub hi: Option<u64>,
}

impl DigitRange {
    pub fn eq(k: u64) -> Self {
        DigitRange { lo: k, hi: Some(k + 1) }
    }

    pub fn geq(k: u64) -> Self {
        DigitRange { lo: k, hi: None }
    }

    pub fn measure(&self) -> f64 {
        match self.hi {
            Some(h) => prob_digit_range(self.lo, h - 1),
            None => crate::gauss_measure::prob_digit_geq(self.lo as f64),
        }
    }
}

/// `γ(a_1 ∈ C, a_2 ∈ D)` from `γ(a_1 ≥ i, a_2 ≥ j) = log2(1 + 1/(ij))` by
/// inclusion-exclusion, as a single integer ratio.
pub fn pair_measure(c: DigitRange, d: DigitRange) -> f64 {
    // (ij+1)/(ij) per corner; the ij parts cancel between signs when all corners are finite
    let corner = |i: Option<u64>, j: Option<u64>| -> (u128, u128) {
        match (i, j) {
            (Some(i), Some(j)) => {
                let p = i as u128 * j as u128;
                (p + 1, p)
            }
            _ => (1, 1),
        }
    };
    let (a, b) = (Some(c.lo), c.hi);
    let (x, y) = (Some(d.lo), d.hi);
    let (n1, d1) = corner(a, x);
    let (n2, d2) = corner(b, y);
    let (n3, d3) = corner(a, y);
    let (n4, d4) = corner(b, x);
    let num = n1 * n2 * d3 * d4;
    let den = d1 * d2 * n3 * n4;
    ((num - den) as f64 / den as f64).ln_1p() / LN_2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsiWitness {
    pub value: f64,
    pub c: DigitRange,
    pub d: DigitRange,
}

/// Largest `|γ(C∩D)/(γ(C)γ(D)) − 1|` over `C ∈ {a_1 = i}, {a_1 ≥ i}` and
/// `D ∈ {a_2 = j}, {a_2 ≥ j}` with `i, j ≤ K`. A lower bound on `ψ(1)`.
pub fn empirical_psi1(k: u64) -> Result<PsiWitness> {
    if k < 2 {
        return Err(Error::domain("empirical_psi1 needs K >= 2"));
    }
    let events: Vec<DigitRange> = (1..=k).flat_map(|i| [DigitRange::eq(i), DigitRange::geq(i)]).collect();
    let mut best = PsiWitness { value: 0.0, c: events[0], d: events[0] };
    for &c in &events {
        let pc = c.measure();
        for &d in &events {
            let v = (pair_measure(c, d) / (pc * d.measure()) - 1.0).abs();
            if v > best.value {
                best = PsiWitness { value: v, c, d };
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiEstimate {
    pub n: u32,
    pub k: u64,
    pub value: f64,
    /// Monte Carlo standard error; 0 for the exact `n = 1` case.
    pub se: f64,
    pub conditioning: DigitRange,
    pub trials: usize,
}

/// Partition of the `a_{1+n}` values: `1..=K` and the tail `> K`.
fn target_cells(k: u64) -> Vec<DigitRange> {
    let mut v: Vec<DigitRange> = (1..=k).map(DigitRange::eq).collect();
    v.push(DigitRange::geq(k + 1));
    v
}

/// Lower estimate of `φ(n) = sup |P(D | C) − P(D)|` with `C` an `a_1` event and
/// `D` an `a_{1+n}` event measurable on the cells `{1}, ..., {K}, {> K}`.
///
/// `n = 1` is exact. For `n ≥ 2` the digits `a_2..a_n` are simulated from the
/// exact chain given `a_1 = i`, and `P(a_{n+1} = j | a_1..a_n)` is averaged
/// rather than sampled.
pub fn empirical_phi(n: u32, k: u64, trials: usize, seed: u64) -> Result<PhiEstimate> {
    if n == 0 || k < 1 {
        return Err(Error::domain("empirical_phi needs n >= 1 and K >= 1"));
    }
    let cells = target_cells(k);
    let marg: Vec<f64> = cells.iter().map(DigitRange::measure).collect();
    if n == 1 {
        let mut best = PhiEstimate { n, k, value: 0.0, se: 0.0, conditioning: DigitRange::eq(1), trials: 0 };
        for c in (1..=k).flat_map(|i| [DigitRange::eq(i), DigitRange::geq(i)]) {
            let pc = c.measure();
            let v: f64 = cells.iter().zip(&marg).map(|(d, pd)| (pair_measure(c, *d) / pc - pd).max(0.0)).sum();
            if v > best.value {
                best.value = v;
                best.conditioning = c;
            }
        }
        return Ok(best);
    }
    if trials < 100 {
        return Err(Error::domain("empirical_phi needs at least 100 trials for n >= 2"));
    }
    let mut best = PhiEstimate { n, k, value: 0.0, se: 0.0, conditioning: DigitRange::eq(1), trials };
    for i in 1..=k {
        // one stream bank per conditioning digit
        let master = seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let rows: Vec<Vec<f64>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut st = ChainState::new(SeedSpec::new(master, t));
                st.push(Digit::new(i).expect("i >= 1"));
                for _ in 1..n {
                    st.next_digit();
                }
                let tp = st.tail_params();
                let mut row: Vec<f64> = (1..=k).map(|j| tp.prob(j as f64)).collect();
                row.push(tp.tail((k + 1) as f64));
                row
            })
            .collect();
        let means: Vec<f64> =
            (0..cells.len()).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / trials as f64).collect();
        let plus: Vec<usize> = (0..cells.len()).filter(|&c| means[c] > marg[c]).collect();
        let per_trial = Moments::of(rows.iter().map(|r| plus.iter().map(|&c| r[c] - marg[c]).sum::<f64>()));
        if per_trial.mean > best.value {
            best.value = per_trial.mean;
            best.se = per_trial.se();
            best.conditioning = DigitRange::eq(i);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_measure::{cylinder_measure_of, gauss_cdf};
    use proptest::prelude::*;

    #[test]
    fn constants() {
        let c = MixingConstants::new();
        assert!((c.eta - 0.0860713).abs() < 1e-7 && c.eta < 0.0861);
        assert!(c.eta_signed < 0.0);
        assert!((c.psi1 - 0.3862944).abs() < 1e-7);
        assert!((c.rho_prime - 0.14018141).abs() < 1e-8);
        assert!((psi_bound(5) / psi_bound(4) - THETA).abs() < 1e-15);
        assert_eq!(psi_bound(2), c.rho_prime);
        assert_eq!(phi_bound(3), psi_bound(3) / 2.0);
        assert_eq!(phi_bound(1), c.eta);
    }

    #[test]
    fn discrepancy_examples() {
        for a in [0.0, 0.3, 1.0] {
            assert_eq!(f_discrepancy(a, 0.0), 0.0);
            assert!(f_discrepancy(a, 1.0).abs() < 1e-15);
        }
        assert!((f_discrepancy(0.0, a_high()) - eta_signed()).abs() < 1e-15);
        assert!((f_discrepancy(1.0, a_low()) + eta_signed()).abs() < 1e-15);
        // f agrees with the two distribution functions it compares
        let x = 0.37;
        let ga = (0.5 + 1.0) * x / (0.5 * x + 1.0);
        assert!((f_discrepancy(0.5, x) - (ga - gauss_cdf(x).unwrap())).abs() < 1e-15);
    }

    #[test]
    fn zeros_at_ends() {
        let (x1, x2) = f_zeros(1.0).unwrap();
        assert!((x1.unwrap() - a_low()).abs() < 1e-15);
        assert_eq!(x2, None);
        let (x1, x2) = f_zeros(0.0).unwrap();
        assert_eq!(x1, None);
        assert!((x2.unwrap() - a_high()).abs() < 1e-15);
        let (_, x2) = f_zeros(1e-9).unwrap();
        assert!((x2.unwrap() - a_high()).abs() < 1e-8);
        assert!(f_zeros(1.5).is_err());
    }

    #[test]
    fn both_zeros_in_middle_match_bracketing() {
        let a = 0.41;
        let (x1, x2) = f_zeros(a).unwrap();
        let (x1, x2) = (x1.unwrap(), x2.unwrap());
        assert!(x2 < x1);
        // bisection on the derivative as an independent oracle
        let bisect = |mut lo: f64, mut hi: f64| {
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if f_dx(a, lo).signum() == f_dx(a, m).signum() {
                    lo = m
                } else {
                    hi = m
                }
            }
            0.5 * (lo + hi)
        };
        assert!((bisect(0.0, 0.5 * (x1 + x2)) - x2).abs() < 1e-12);
        assert!((bisect(0.5 * (x1 + x2), 1.0) - x1).abs() < 1e-12);
    }

    #[test]
    fn sign_changes_only_at_zeros() {
        for i in 0..=40 {
            let a = i as f64 / 40.0;
            let (x1, x2) = f_zeros(a).unwrap();
            let zs: Vec<f64> = [x1, x2].into_iter().flatten().collect();
            let mut prev = f_dx(a, 0.0);
            for j in 1..=10_000 {
                let x = j as f64 / 10_000.0;
                let g = f_dx(a, x);
                if g.signum() != prev.signum() && g != 0.0 && prev != 0.0 {
                    assert!(zs.iter().any(|z| (z - x).abs() <= 1e-4 + 1e-12), "a = {a}, x = {x}");
                }
                prev = g;
            }
        }
    }

    #[test]
    fn extremal_profiles() {
        let p0 = extremal_discrepancy(0.0).unwrap();
        assert_eq!(p0.regime, Regime::Low);
        assert!((p0.magnitude - eta_exact()).abs() < 1e-15);
        let p1 = extremal_discrepancy(1.0).unwrap();
        assert_eq!(p1.regime, Regime::High);
        assert!((p1.magnitude - eta_exact()).abs() < 1e-15);
        let pm = extremal_discrepancy(a_low()).unwrap();
        assert_eq!(pm.regime, Regime::Middle);
        assert_eq!(pm.min_set.len(), 2);
        let bound = pm.regime_bound.unwrap();
        assert!(bound.abs() <= 0.0118, "{bound}");
        assert!(pm.magnitude <= bound.abs());
        assert!(extremal_discrepancy(0.41).unwrap().magnitude <= 0.0118);
    }

    #[test]
    fn profile_magnitude_never_exceeds_eta() {
        let scan = profile_scan(501).unwrap();
        let best = scan.iter().map(|p| p.magnitude).fold(0.0, f64::max);
        assert!((best - eta_exact()).abs() < 1e-15);
        for p in &scan {
            assert!(p.min_set.len() <= 2);
        }
    }

    #[test]
    fn eta_numeric_matches_and_converges() {
        let coarse = eta_numeric(1001, 1001).unwrap();
        let fine = eta_numeric(1001, 2001).unwrap();
        let e = eta_exact();
        assert!((fine.value - e).abs() < 1e-4);
        assert!(coarse.argmax_a == 0.0 || coarse.argmax_a == 1.0);
        let (ec, ef) = ((coarse.value - e).abs(), (fine.value - e).abs());
        assert!(ef * 2.0 <= ec, "{ec} {ef}");
    }

    #[test]
    fn pair_measure_against_cylinders() {
        let cyl = |i: u64, j: u64| cylinder_measure_of(&crate::cf_core::digits(&[i, j]).unwrap()).unwrap();
        for i in 1..6 {
            for j in 1..6 {
                let p = pair_measure(DigitRange::eq(i), DigitRange::eq(j));
                assert!((p - cyl(i, j)).abs() < 1e-15, "{i} {j}");
            }
        }
        assert!((pair_measure(DigitRange::eq(1), DigitRange::eq(1)) - (10.0f64 / 9.0).ln() / LN_2).abs() < 1e-15);
        // a_1 = 2, a_2 >= 3: finite sum of cylinders plus the closed tail
        let direct: f64 =
            (3..2000).map(|j| cyl(2, j)).sum::<f64>() + pair_measure(DigitRange::eq(2), DigitRange::geq(2000));
        assert!((direct - pair_measure(DigitRange::eq(2), DigitRange::geq(3))).abs() < 1e-13);
        assert!((pair_measure(DigitRange::geq(1), DigitRange::geq(1)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi1_examples() {
        let one =
            (pair_measure(DigitRange::eq(1), DigitRange::eq(1)) / DigitRange::eq(1).measure().powi(2) - 1.0).abs();
        assert!((one - 0.1175751066).abs() < 1e-9);
        assert!(empirical_psi1(2).unwrap().value >= one);
        let mut last = 0.0;
        for k in [2, 5, 10, 30] {
            let v = empirical_psi1(k).unwrap().value;
            assert!(v >= last && v <= psi_bound(1) + 1e-9);
            last = v;
        }
    }

    #[test]
    fn phi_estimates() {
        for k in [2, 10, 50] {
            assert!(empirical_phi(1, k, 0, 0).unwrap().value <= eta_exact() + 1e-9);
        }
        let p2 = empirical_phi(2, 4, 4000, 7).unwrap();
        let p3 = empirical_phi(3, 4, 4000, 7).unwrap();
        assert!(p3.value <= phi_bound(3) + 3.0 * p3.se);
        assert!(p2.value <= phi_bound(2) + 3.0 * p2.se);
        let p1 = empirical_phi(1, 4, 0, 0).unwrap();
        assert!(p1.value > p2.value);
    }

    proptest! {
        #[test]
        fn f_nondecreasing_in_a(x in 0.0f64..=1.0, a in 0.0f64..1.0, da in 0.0f64..0.5) {
            let b = (a + da).min(1.0);
            prop_assert!(f_discrepancy(b, x) >= f_discrepancy(a, x) - 1e-15);
            prop_assert!(f_da(a, x) >= 0.0);
        }

        #[test]
        fn zeros_are_roots(a in 0.0f64..=1.0) {
            let (x1, x2) = f_zeros(a).unwrap();
            for z in [x1, x2].into_iter().flatten() {
                prop_assert!(f_dx(a, z).abs() < 1e-12);
            }
        }
    }
}
