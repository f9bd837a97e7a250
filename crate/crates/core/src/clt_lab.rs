//! The counting process `S_n = Σ_{k≤n} 1{a_k ∈ A_k}` and its normal limit.
//!
//! The conditions checked are: only finitely many `n` with
//! `ρ − ε < γ(A_n) < 1`, and divergence of `Σ γ(B_n)` where `B_n = A_n`
//! unless `γ(A_n) = 1`, in which case `B_n = ∅`.

use serde::Serialize;

use crate::digit_sampler::{par_trajectories, sample_trajectory, SampleMode, SeedSpec};
use crate::error::{Error, Result};
use crate::gauss_measure::DigitEvent;
use crate::mixing_lab::{eta_exact, eta_signed, rho_prime, THETA};
use crate::stats::{chi_square_gof, ecdf, histogram, ks_normal, ChiSquare, Moments};
use crate::zero_one::{series_verdict, CriterionVariant, EventFamily, Method, VerdictKind};

pub use crate::stats::normal_cdf;

pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CltConstants {
    /// `φ(1)`, a magnitude.
    pub eta: f64,
    /// `(1 − log 2 + log log 2)/log 2`, negative; enters `ρ` with this sign.
    pub eta_signed: f64,
    pub rho: f64,
    pub theta: f64,
    pub rho_prime: f64,
}

/// `ρ = 1 − η_signed − 2ρ'/(1 − θ) ≈ 0.6834421`.
pub fn clt_constants() -> CltConstants {
    let (es, rp) = (eta_signed(), rho_prime());
    CltConstants {
        eta: eta_exact(),
        eta_signed: es,
        rho: 1.0 - es - 2.0 * rp / (1.0 - THETA),
        theta: THETA,
        rho_prime: rp,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltConditionReport {
    pub horizon: u64,
    pub epsilon: f64,
    pub rho: f64,
    /// No `n` in the second half of the horizon has `ρ − ε < γ(A_n) < 1`.
    pub threshold_ok: bool,
    pub violations: u64,
    pub last_violation: Option<u64>,
    /// `A_n ∌ 1` on the second half, so `A_n ⊂ {a_n > 1}` and `γ(A_n) ≤ log2(3/2)`.
    pub excludes_one_eventually: bool,
    /// Maximal runs `[from, to]` with `γ(A_n) = 1`, where `B_n = ∅`.
    pub bn_empty: Vec<(u64, u64)>,
    pub divergence_ok: bool,
    pub divergence_verdict: VerdictKind,
    pub divergence_test: String,
    pub notes: Vec<String>,
}

impl CltConditionReport {
    pub fn passes(&self) -> bool {
        self.threshold_ok && self.divergence_ok
    }
}

pub fn check_clt_conditions(family: &EventFamily, horizon: u64, epsilon: f64) -> Result<CltConditionReport> {
    if horizon < 1 || !(epsilon > 0.0) {
        return Err(Error::config("check_clt_conditions needs horizon >= 1 and epsilon > 0"));
    }
    let rho = clt_constants().rho;
    let half = horizon / 2;
    let (mut violations, mut last_violation, mut late_violation) = (0, None, false);
    let mut excludes_one = true;
    let mut bn_empty: Vec<(u64, u64)> = vec![];
    for n in 1..=horizon {
        let Some(e) = family.event(n)? else { continue };
        let g = e.measure();
        if e.is_certain() {
            match bn_empty.last_mut() {
                Some(r) if r.1 + 1 == n => r.1 = n,
                _ => bn_empty.push((n, n)),
            }
        } else if g > rho - epsilon {
            violations += 1;
            last_violation = Some(n);
            late_violation |= n > half;
        }
        if n > half && e.contains_one() {
            excludes_one = false;
        }
    }
    let verdict = series_verdict(family, CriterionVariant::Clt, horizon.max(1000), Method::IntegralTest)?;
    let mut notes = vec!["a finite horizon can only falsify 'finitely many n', never verify it".to_string()];
    if excludes_one {
        notes.push("A_n excludes the digit 1 on the second half of the horizon".into());
    }
    Ok(CltConditionReport {
        horizon,
        epsilon,
        rho,
        threshold_ok: !late_violation,
        violations,
        last_violation,
        excludes_one_eventually: excludes_one,
        bn_empty,
        divergence_ok: verdict.verdict == VerdictKind::AsInfinitelyOften,
        divergence_verdict: verdict.verdict,
        divergence_test: verdict.test,
        notes,
    })
}

/// `E(S_n) = Σ_{k≤n} γ(A_k)`.
pub fn exact_mean(family: &EventFamily, n: u64) -> Result<f64> {
    mean_under(family, n, DigitEvent::measure)
}

fn mean_under(family: &EventFamily, n: u64, law: fn(&DigitEvent) -> f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("n must be at least 1"));
    }
    let mut s = 0.0;
    for k in 1..=n {
        if let Some(e) = family.event(k)? {
            s += law(&e);
        }
    }
    Ok(s)
}

/// Event probability when digits are i.i.d. with `P(a = k) = 1/(k(k+1))`.
pub fn luroth_measure(e: &DigitEvent) -> f64 {
    let geq = |k: f64| if k <= 1.0 { 1.0 } else { 1.0 / k };
    match *e {
        DigitEvent::Threshold { b } => geq(b.ceil()),
        DigitEvent::Equal { d } => 1.0 / (d as f64 * (d as f64 + 1.0)),
        DigitEvent::ClosedBand { d, m } => geq(d as f64) - geq(d as f64 + m as f64 + 1.0),
        DigitEvent::OpenBand { d, m } => geq(d as f64 + 1.0) - geq(d as f64 + m as f64 + 1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceBound {
    pub n: u64,
    pub epsilon: f64,
    pub sum_gamma_b: f64,
    /// `ε Σ_{i≤n} γ(B_i)`.
    pub value: f64,
    /// `(1 − ρ + ε) − η_signed − 2ρ'/(1−θ)`, the per-term factor as printed; equals `ε`.
    pub per_term_literal: f64,
    /// `(1 − ρ + ε) − 2Σ_m φ(m)` with `φ(1) = η` and `φ(m) ≤ ψ(m)/2`.
    pub per_term_strict: f64,
    pub literal_holds: bool,
    pub strict_holds: bool,
}

pub fn variance_lower_bound(family: &EventFamily, n: u64, epsilon: f64) -> Result<VarianceBound> {
    if n < 1 || !(epsilon > 0.0) {
        return Err(Error::config("variance_lower_bound needs n >= 1 and epsilon > 0"));
    }
    let mut sum = 0.0;
    for k in 1..=n {
        if let Some(e) = family.event(k)? {
            if !e.is_certain() {
                sum += e.measure();
            }
        }
    }
    let c = clt_constants();
    let geometric = c.rho_prime / (1.0 - c.theta);
    let literal = (1.0 - c.rho + epsilon) - c.eta_signed - 2.0 * geometric;
    let strict = (1.0 - c.rho + epsilon) - 2.0 * c.eta - geometric;
    Ok(VarianceBound {
        n,
        epsilon,
        sum_gamma_b: sum,
        value: epsilon * sum,
        per_term_literal: literal,
        per_term_strict: strict,
        literal_holds: literal >= epsilon - 1e-12,
        strict_holds: strict >= epsilon - 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltResult {
    pub n: u64,
    pub exact_mean: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub mc_variance: f64,
    pub variance_lower_bound: f64,
    pub mean_ok: bool,
    pub variance_ok: bool,
    pub ks_distance: f64,
    pub chi_square: ChiSquare,
    pub ecdf: Vec<(f64, f64)>,
    pub histogram: Vec<(f64, f64, u64)>,
    #[serde(skip)]
    pub standardized: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CltExperiment {
    pub constants: CltConstants,
    pub conditions: CltConditionReport,
    pub family: EventFamily,
    pub mode: SampleMode,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub results: Vec<CltResult>,
}

const HIST_BINS: usize = 32;
const HIST_RANGE: f64 = 4.0;

/// Simulates `S_n` for each `n` in `ns` on one bank of `trials` trajectories.
///
/// Centres by the exact mean and scales by the Monte Carlo standard deviation.
pub fn clt_experiment(
    family: &EventFamily,
    ns: &[u64],
    trials: usize,
    seed: u64,
    mode: SampleMode,
    epsilon: f64,
) -> Result<CltExperiment> {
    if trials < 1000 {
        return Err(Error::config(format!("clt_experiment needs at least 1000 trials, got {trials}")));
    }
    let mut ns: Vec<u64> = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let Some(&top) = ns.last() else {
        return Err(Error::config("no n given"));
    };
    if ns[0] < 1 {
        return Err(Error::config("n must be at least 1"));
    }
    let law: fn(&DigitEvent) -> f64 = match mode {
        SampleMode::Luroth => luroth_measure,
        SampleMode::GammaA(_) => {
            return Err(Error::config(
                "gamma:a trajectories are not stationary; use a Gauss-distributed or Luroth mode",
            ))
        }
        _ => DigitEvent::measure,
    };
    let conditions = check_clt_conditions(family, top, epsilon)?;
    if !conditions.passes() {
        let why = if !conditions.divergence_ok {
            format!("sum of gamma(B_n) is not certified divergent ({})", conditions.divergence_test)
        } else {
            format!("rho - eps < gamma(A_n) < 1 still occurs at n = {}", conditions.last_violation.unwrap_or(0))
        };
        return Err(Error::Precondition(format!("CLT conditions fail for {}: {why}", family.describe())));
    }
    let events = family.events(top)?;
    let counts: Vec<Result<Vec<u64>>> = par_trajectories(seed, trials, |s: SeedSpec| {
        let mut out = Vec::with_capacity(ns.len());
        let mut c = 0u64;
        let mut next = 0;
        for (i, a) in sample_trajectory(s, top as usize, mode)?.enumerate() {
            if events[i].is_some_and(|e| e.contains(a)) {
                c += 1;
            }
            if ns[next] == i as u64 + 1 {
                out.push(c);
                next += 1;
            }
        }
        Ok(out)
    });
    let counts: Vec<Vec<u64>> = counts.into_iter().collect::<Result<_>>()?;

    let mut results = vec![];
    for (j, &n) in ns.iter().enumerate() {
        let exact = mean_under(family, n, law)?;
        let m = Moments::of(counts.iter().map(|r| r[j] as f64));
        let var = m.variance();
        if var == 0.0 {
            return Err(Error::Precondition(format!("S_{n} has zero sample variance")));
        }
        let sd = var.sqrt();
        let mut z: Vec<f64> = counts.iter().map(|r| (r[j] as f64 - exact) / sd).collect();
        z.sort_by(f64::total_cmp);
        let hist = histogram(&z, -HIST_RANGE, HIST_RANGE, HIST_BINS);
        let probs: Vec<f64> = hist
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi, _))| {
                let l = if i == 0 { 0.0 } else { normal_cdf(lo) };
                let h = if i == HIST_BINS - 1 { 1.0 } else { normal_cdf(hi) };
                h - l
            })
            .collect();
        let chi = chi_square_gof(&hist.iter().map(|b| b.2).collect::<Vec<_>>(), &probs);
        let vlb = variance_lower_bound(family, n, epsilon)?.value;
        let se_var = var * (2.0 / (trials as f64 - 1.0)).sqrt();
        results.push(CltResult {
            n,
            exact_mean: exact,
            mc_mean: m.mean,
            mc_se: m.se(),
            mc_variance: var,
            variance_lower_bound: vlb,
            mean_ok: (m.mean - exact).abs() <= 3.0 * m.se(),
            variance_ok: var + 3.0 * se_var >= vlb,
            ks_distance: ks_normal(&z),
            chi_square: chi,
            ecdf: ecdf(&z),
            histogram: hist,
            standardized: z,
        });
    }
    Ok(CltExperiment {
        constants: clt_constants(),
        conditions,
        family: family.clone(),
        mode,
        trials,
        seed,
        epsilon,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf_core::Digit;
    use crate::gauss_measure::prob_digit_geq;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn constants_match_printed_values() {
        let c = clt_constants();
        assert!((c.rho - 0.683443).abs() < 1e-5 && c.rho > 0.68344);
        assert!((c.eta - 0.0860713).abs() < 1e-7 && c.eta < 0.0861);
        // independent evaluation from log 2 and π
        let direct = 1.0 - (1.0 - LN_2 + LN_2.ln()) / LN_2 - 2.0 * (PI * PI * LN_2 / 6.0 - 1.0) / (1.0 - 0.30367);
        assert!((c.rho - direct).abs() < 1e-15);
        assert!((c.rho - 0.6834420883).abs() < 1e-9);
    }

    #[test]
    fn conditions_examples() {
        let two = EventFamily::threshold("2").unwrap();
        let r = check_clt_conditions(&two, 500, 0.01).unwrap();
        assert!(r.threshold_ok && r.divergence_ok && r.passes());
        assert!(r.excludes_one_eventually);
        let one = EventFamily::threshold("1").unwrap();
        let r = check_clt_conditions(&one, 500, 0.01).unwrap();
        assert_eq!(r.bn_empty, vec![(1, 500)]);
        assert!(!r.divergence_ok);
        let eq = EventFamily::preset("sqrt-nlogn-equal").unwrap();
        let r = check_clt_conditions(&eq, 2000, 0.01).unwrap();
        assert!(r.threshold_ok && r.excludes_one_eventually);
        // γ(a = 1) = 0.415 is below ρ, γ(a ≤ 2) = 0.585 too; {a ≤ 3} = 0.678 sits inside (ρ - 0.01, 1)
        let band = EventFamily::closed_band("1/3", "1").unwrap();
        let r = check_clt_conditions(&band, 100, 0.01).unwrap();
        assert!(!r.threshold_ok);
        assert_eq!(r.last_violation, Some(100));
    }

    #[test]
    fn exact_mean_examples() {
        let two = EventFamily::threshold("2").unwrap();
        assert!((exact_mean(&two, 3).unwrap() - 1.7548875).abs() < 1e-7);
        assert_eq!(exact_mean(&EventFamily::threshold("1").unwrap(), 10).unwrap(), 10.0);
        let empty = EventFamily::preset("open-band-empty").unwrap();
        assert_eq!(exact_mean(&empty, 10).unwrap() - exact_mean(&empty, 1).unwrap(), 0.0);
    }

    #[test]
    fn variance_bound_examples() {
        let two = EventFamily::threshold("2").unwrap();
        let v = variance_lower_bound(&two, 100, 0.05).unwrap();
        assert!((v.value - 0.05 * 100.0 * prob_digit_geq(2.0)).abs() < 1e-12);
        assert!((v.value - 2.9248).abs() < 1e-4);
        assert!((v.per_term_literal - 0.05).abs() < 1e-12 && v.literal_holds);
        assert!(!v.strict_holds);
        let one = variance_lower_bound(&EventFamily::threshold("1").unwrap(), 50, 0.1).unwrap();
        assert_eq!(one.value, 0.0);
    }

    #[test]
    fn luroth_law() {
        assert_eq!(luroth_measure(&DigitEvent::Threshold { b: 2.0 }), 0.5);
        assert_eq!(luroth_measure(&DigitEvent::Threshold { b: 0.5 }), 1.0);
        let total: f64 = (1..=1000).map(|d| luroth_measure(&DigitEvent::Equal { d })).sum();
        assert!((total - (1.0 - 1.0 / 1001.0)).abs() < 1e-12);
        assert!((luroth_measure(&DigitEvent::ClosedBand { d: 2, m: 1 }) - (1.0 / 6.0 + 1.0 / 12.0)).abs() < 1e-15);
        assert_eq!(luroth_measure(&DigitEvent::OpenBand { d: 2, m: 0 }), 0.0);
    }

    #[test]
    fn refuses_degenerate_family() {
        let one = EventFamily::threshold("1").unwrap();
        assert!(matches!(
            clt_experiment(&one, &[100], 1000, 1, SampleMode::Mixture, 0.01),
            Err(Error::Precondition(_))
        ));
        let two = EventFamily::threshold("2").unwrap();
        assert!(matches!(clt_experiment(&two, &[100], 999, 1, SampleMode::Mixture, 0.01), Err(Error::Config(_))));
    }

    #[test]
    fn small_experiment_is_sane_and_reproducible() {
        let two = EventFamily::threshold("2").unwrap();
        let a = clt_experiment(&two, &[50, 200], 1000, 11, SampleMode::Exact, 0.01).unwrap();
        for r in &a.results {
            assert!(r.mean_ok, "{}: {} vs {}", r.n, r.mc_mean, r.exact_mean);
            assert!(r.variance_ok);
            assert!(r.ks_distance < 0.1);
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| clt_experiment(&two, &[50, 200], 1000, 11, SampleMode::Exact, 0.01).unwrap());
        assert_eq!(a, b);
        let l = clt_experiment(&two, &[200], 1000, 11, SampleMode::Luroth, 0.01).unwrap();
        assert!(l.results[0].mean_ok);
        assert!((l.results[0].exact_mean - 100.0).abs() < 1e-12);
    }

    #[test]
    fn adjacent_pair_oracle() {
        // Var(1{a_1 ≥ 2} + 1{a_2 ≥ 2}) from the exact two-cylinder measure
        use crate::mixing_lab::{pair_measure, DigitRange};
        let p = prob_digit_geq(2.0);
        let joint = pair_measure(DigitRange::geq(2), DigitRange::geq(2));
        let exact_var = 2.0 * p * (1.0 - p) + 2.0 * (joint - p * p);
        let two = EventFamily::threshold("2").unwrap();
        let runs = par_trajectories(5, 40_000, |s| {
            sample_trajectory(s, 2, SampleMode::Exact).unwrap().filter(|a| *a >= Digit::new(2).unwrap()).count() as f64
        });
        let m = Moments::of(runs);
        assert!((m.variance() - exact_var).abs() < 0.02, "{} vs {exact_var}", m.variance());
        assert!(variance_lower_bound(&two, 2, 0.01).unwrap().value <= exact_var);
    }
}
