//! Limsup events `A_n ∈ σ(a_n)` and their 0-1 laws.
//!
//! Four families are supported:
//!
//! | kind          | event                                | governing series                              |
//! |---------------|--------------------------------------|-----------------------------------------------|
//! | `threshold`   | `a_n ≥ b_n`                          | `Σ 1/b_n`                                     |
//! | `equal`       | `a_n = d_n`                          | `Σ 1/d_n²`                                    |
//! | `closed_band` | `d_n ≤ a_n ≤ d_n + ⌊d_n/c_n⌋`        | `max{Σ 1/(c_n d_n), Σ 1/d_n²}`                |
//! | `open_band`   | `d_n < a_n ≤ d_n + ⌊d_n/c_n⌋`        | `Σ_{c_n ≤ d_n} 1/(c_n d_n)`                   |
//!
//! In the CLT variant the threshold series runs over `b_n > 1` only and the
//! second closed-band series over `d_n > 1`.
//!
//! Verdicts are only certified for constant sequences and for registered
//! presets whose comparison bounds are checked term by term up to the horizon.

use serde::{Deserialize, Serialize};

use crate::cf_core::Digit;
use crate::digit_sampler::{par_trajectories, sample_trajectory, SampleMode, SeedSpec};
use crate::error::{Error, Result};
use crate::expr::SequenceSpec;
use crate::gauss_measure::DigitEvent;
use crate::mixing_lab::{psi_bound, MixingConstants};
use crate::stats::Moments;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    Threshold { b: SequenceSpec },
    Equal { d: SequenceSpec },
    ClosedBand { c: SequenceSpec, d: SequenceSpec },
    OpenBand { c: SequenceSpec, d: SequenceSpec },
}

fn default_n0() -> u64 {
    1
}

/// `A_n`, empty for `n < n0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventFamily {
    #[serde(flatten)]
    pub kind: FamilyKind,
    #[serde(default = "default_n0")]
    pub n0: u64,
}

impl EventFamily {
    pub fn threshold(b: &str) -> Result<Self> {
        Ok(EventFamily { kind: FamilyKind::Threshold { b: SequenceSpec::parse(b)? }, n0: 1 })
    }

    pub fn equal(d: &str) -> Result<Self> {
        Ok(EventFamily { kind: FamilyKind::Equal { d: SequenceSpec::parse(d)? }, n0: 1 })
    }

    pub fn closed_band(c: &str, d: &str) -> Result<Self> {
        Ok(EventFamily {
            kind: FamilyKind::ClosedBand { c: SequenceSpec::parse(c)?, d: SequenceSpec::parse(d)? },
            n0: 1,
        })
    }

    pub fn open_band(c: &str, d: &str) -> Result<Self> {
        Ok(EventFamily { kind: FamilyKind::OpenBand { c: SequenceSpec::parse(c)?, d: SequenceSpec::parse(d)? }, n0: 1 })
    }

    pub fn starting_at(mut self, n0: u64) -> Self {
        self.n0 = n0.max(1);
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: EventFamily = serde_json::from_str(s)?;
        let n0 = f.n0;
        Ok(f.starting_at(n0))
    }

    pub fn preset(name: &str) -> Result<Self> {
        PRESETS
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.family())
            .ok_or_else(|| Error::config(format!("unknown preset '{name}'")))
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Threshold { .. } => "threshold",
            FamilyKind::Equal { .. } => "equal",
            FamilyKind::ClosedBand { .. } => "closed_band",
            FamilyKind::OpenBand { .. } => "open_band",
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            FamilyKind::Threshold { b } => format!("a_n >= b_n, b_n = {b}"),
            FamilyKind::Equal { d } => format!("a_n = d_n, d_n = {d}"),
            FamilyKind::ClosedBand { c, d } => format!("d_n <= a_n <= d_n + floor(d_n/c_n), c_n = {c}, d_n = {d}"),
            FamilyKind::OpenBand { c, d } => format!("d_n < a_n <= d_n + floor(d_n/c_n), c_n = {c}, d_n = {d}"),
        }
    }

    fn positive(spec: &SequenceSpec, n: u64, what: &str) -> Result<f64> {
        let v = spec.eval(n)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::config(format!("{what} = {spec} is {v} at n = {n}; it must be positive")))
        }
    }

    /// `d_n` floored to an integer `≥ 1`.
    fn integer(spec: &SequenceSpec, n: u64) -> Result<u64> {
        let v = Self::positive(spec, n, "d_n")?.floor();
        if v < 1.0 {
            return Err(Error::config(format!("d_n = {spec} floors to {v} at n = {n}")));
        }
        Ok(if v >= u64::MAX as f64 { u64::MAX } else { v as u64 })
    }

    /// The event at index `n`, or `None` when `n < n0`.
    pub fn event(&self, n: u64) -> Result<Option<DigitEvent>> {
        if n < self.n0 || n == 0 {
            return Ok(None);
        }
        Ok(Some(match &self.kind {
            FamilyKind::Threshold { b } => DigitEvent::Threshold { b: Self::positive(b, n, "b_n")? },
            FamilyKind::Equal { d } => DigitEvent::Equal { d: Self::integer(d, n)? },
            FamilyKind::ClosedBand { c, d } => {
                let (c, d) = (Self::positive(c, n, "c_n")?, Self::integer(d, n)?);
                DigitEvent::ClosedBand { d, m: band_width(d, c) }
            }
            FamilyKind::OpenBand { c, d } => {
                let (c, d) = (Self::positive(c, n, "c_n")?, Self::integer(d, n)?);
                DigitEvent::OpenBand { d, m: band_width(d, c) }
            }
        }))
    }

    /// Events for `n = 1..=horizon` (index `n - 1`).
    pub fn events(&self, horizon: u64) -> Result<Vec<Option<DigitEvent>>> {
        (1..=horizon).map(|n| self.event(n)).collect()
    }

    pub fn prob(&self, n: u64) -> Result<f64> {
        Ok(self.event(n)?.map_or(0.0, |e| e.measure()))
    }

    /// `n ∈ A_n` test on a realised digit.
    pub fn contains(&self, n: u64, a: Digit) -> Result<bool> {
        Ok(self.event(n)?.is_some_and(|e| e.contains(a)))
    }

    /// Evaluates the family up to `horizon`, returning warnings about flooring.
    pub fn validate(&self, horizon: u64) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let d = match &self.kind {
            FamilyKind::Threshold { .. } => None,
            FamilyKind::Equal { d } | FamilyKind::ClosedBand { d, .. } | FamilyKind::OpenBand { d, .. } => Some(d),
        };
        for n in self.n0..=horizon.max(self.n0) {
            self.event(n)?;
            if let Some(d) = d {
                let v = d.eval(n)?;
                if v.fract() != 0.0 && warnings.is_empty() {
                    warnings.push(format!("d_n = {d} is not an integer (first at n = {n}); it is floored"));
                }
            }
        }
        Ok(warnings)
    }

    fn raw(&self, n: u64) -> Result<Raw> {
        Ok(match &self.kind {
            FamilyKind::Threshold { b } => Raw { b: Self::positive(b, n, "b_n")?, ..Raw::default() },
            FamilyKind::Equal { d } => Raw { d: Self::integer(d, n)? as f64, ..Raw::default() },
            FamilyKind::ClosedBand { c, d } | FamilyKind::OpenBand { c, d } => {
                Raw { c: Self::positive(c, n, "c_n")?, d: Self::integer(d, n)? as f64, ..Raw::default() }
            }
        })
    }
}

fn band_width(d: u64, c: f64) -> u64 {
    let m = (d as f64 / c).floor();
    if m >= u64::MAX as f64 {
        u64::MAX
    } else {
        m as u64
    }
}

#[derive(Default)]
struct Raw {
    b: f64,
    c: f64,
    d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionVariant {
    /// Series criteria for "infinitely often" (Borel-Bernstein type).
    ZeroOne,
    /// The restricted series used for the CLT divergence condition.
    Clt,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesComponent {
    pub term: String,
    pub restriction: Option<String>,
}

/// The series whose divergence decides `γ(limsup A_n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionSeries {
    pub family: EventFamily,
    pub variant: CriterionVariant,
    /// Diverges iff at least one component diverges.
    pub components: Vec<SeriesComponent>,
}

pub fn criterion_series(family: &EventFamily, variant: CriterionVariant) -> CriterionSeries {
    let comp = |term: &str, restriction: Option<&str>| SeriesComponent {
        term: term.to_string(),
        restriction: restriction.map(str::to_string),
    };
    let clt = variant == CriterionVariant::Clt;
    let components = match family.kind {
        FamilyKind::Threshold { .. } => vec![comp("1/b_n", clt.then_some("b_n > 1"))],
        FamilyKind::Equal { .. } => vec![comp("1/d_n^2", None)],
        FamilyKind::ClosedBand { .. } => {
            vec![comp("1/(c_n d_n)", None), comp("1/d_n^2", clt.then_some("d_n > 1"))]
        }
        FamilyKind::OpenBand { .. } => vec![comp("1/(c_n d_n)", Some("c_n <= d_n"))],
    };
    CriterionSeries { family: family.clone(), variant, components }
}

impl CriterionSeries {
    /// Component terms at `n`; zero before `n0` or where the restriction fails.
    pub fn terms(&self, n: u64) -> Result<Vec<f64>> {
        if n < self.family.n0 || n == 0 {
            return Ok(vec![0.0; self.components.len()]);
        }
        let r = self.family.raw(n)?;
        let clt = self.variant == CriterionVariant::Clt;
        Ok(match self.family.kind {
            FamilyKind::Threshold { .. } => vec![if clt && r.b <= 1.0 { 0.0 } else { 1.0 / r.b }],
            FamilyKind::Equal { .. } => vec![1.0 / (r.d * r.d)],
            FamilyKind::ClosedBand { .. } => {
                vec![1.0 / (r.c * r.d), if clt && r.d <= 1.0 { 0.0 } else { 1.0 / (r.d * r.d) }]
            }
            FamilyKind::OpenBand { .. } => vec![if r.c <= r.d { 1.0 / (r.c * r.d) } else { 0.0 }],
        })
    }

    pub fn combined(&self, n: u64) -> Result<f64> {
        Ok(self.terms(n)?.iter().sum())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictKind {
    AsInfinitelyOften,
    AsFinitelyOften,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Divergence witnesses only.
    PartialSum,
    /// Divergence witnesses and integral-test convergence bounds.
    IntegralTest,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderPoint {
    pub n: u64,
    /// One partial sum per series component.
    pub sums: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub horizon: u64,
    pub method: Method,
    pub partial_sums: Vec<LadderPoint>,
    pub preset: Option<String>,
    /// `log10` of an index by which the partial sums provably exceed the threshold.
    pub divergence_witness_log10: Option<f64>,
    /// Upper bound on the sum of all terms past the horizon.
    pub tail_bound: Option<f64>,
    /// Upper bound on the whole series.
    pub total_bound: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub verdict: VerdictKind,
    pub test: String,
    pub evidence: Evidence,
}

/// Partial sums beyond this count as divergence when backed by a lower bound.
pub const DIVERGENCE_THRESHOLD: f64 = 50.0;

/// Relative slack for the term-by-term comparison, covering rounding in the two evaluations.
const COMPARE_SLACK: f64 = 1e-12;

type RealFn = fn(f64) -> f64;

#[derive(Clone, Copy)]
enum Certificate {
    /// Terms dominate `lower` from `from` on; `antiderivative` of `lower`
    /// diverges and `witness_log10(T)` is `log10` of the point where it reaches `T`.
    Diverges { from: u64, lower: RealFn, antiderivative: RealFn, witness_log10: RealFn, argument: &'static str },
    /// Terms are dominated by the decreasing `upper` from `from` on, with
    /// `Σ_{n>H} upper(n) ≤ tail(H)`.
    Converges { from: u64, upper: RealFn, tail: RealFn, argument: &'static str },
}

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    kind: &'static str,
    c: &'static str,
    d: &'static str,
    n0: u64,
    cert: Certificate,
}

impl Preset {
    pub fn family(&self) -> EventFamily {
        let f = match self.kind {
            "threshold" => EventFamily::threshold(self.d),
            "equal" => EventFamily::equal(self.d),
            "closed_band" => EventFamily::closed_band(self.c, self.d),
            _ => EventFamily::open_band(self.c, self.d),
        };
        f.expect("preset expressions parse").starting_at(self.n0)
    }
}

fn inv_n_log_n(x: f64) -> f64 {
    1.0 / (x * x.ln())
}

fn log_log(x: f64) -> f64 {
    x.ln().ln()
}

fn witness_log_log(t: f64) -> f64 {
    t.exp() / std::f64::consts::LN_10
}

fn kappa_sqrt_log(h: f64) -> f64 {
    let a = 1.0 - 1.0 / (h.sqrt() * h.ln());
    1.0 / (a * a)
}

pub static PRESETS: &[Preset] = &[
    Preset {
        name: "sqrt-nlogn-equal",
        summary: "a_n = floor(sqrt(n log n)): infinitely often",
        kind: "equal",
        c: "",
        d: "floor(sqrt(n*log(n)))",
        n0: 2,
        cert: Certificate::Diverges {
            from: 2,
            lower: inv_n_log_n,
            antiderivative: log_log,
            witness_log10: witness_log_log,
            argument: "d_n <= sqrt(n log n) gives 1/d_n^2 >= 1/(n log n); integral log log n diverges",
        },
    },
    Preset {
        name: "sqrtn-logn-equal",
        summary: "a_n = floor(sqrt(n) log n): finitely often",
        kind: "equal",
        c: "",
        d: "floor(sqrt(n)*log(n))",
        n0: 3,
        cert: Certificate::Converges {
            from: 3,
            upper: |x| 1.0 / (x.sqrt() * x.ln() - 1.0).powi(2),
            tail: |h| kappa_sqrt_log(h) / h.ln(),
            argument: "d_n >= sqrt(n) log n - 1; 1/(sqrt(x) log x - 1)^2 <= kappa_H/(x log^2 x) for x >= H, \
                       kappa_H = (1 - 1/(sqrt(H) log H))^-2, tail <= kappa_H/log H",
        },
    },
    Preset {
        name: "closed-band-2d",
        summary: "d_n <= a_n <= d_n + floor(d_n/c_n), c_n = 2 d_n, d_n = floor(sqrt(n log n)): infinitely often",
        kind: "closed_band",
        c: "2*floor(sqrt(n*log(n)))",
        d: "floor(sqrt(n*log(n)))",
        n0: 2,
        cert: Certificate::Diverges {
            from: 4,
            lower: inv_n_log_n,
            antiderivative: log_log,
            witness_log10: witness_log_log,
            argument: "1/(c_n d_n) + 1/d_n^2 = 3/(2 d_n^2) >= 1/(n log n); integral log log n diverges",
        },
    },
    Preset {
        name: "harmonic-threshold",
        summary: "a_n >= n: infinitely often",
        kind: "threshold",
        c: "",
        d: "n",
        n0: 1,
        cert: Certificate::Diverges {
            from: 2,
            lower: |x| 1.0 / x,
            antiderivative: f64::ln,
            witness_log10: |t| t / std::f64::consts::LN_10,
            argument: "terms 1/n; integral log n diverges",
        },
    },
    Preset {
        name: "nlogn-threshold",
        summary: "a_n >= n log n: infinitely often",
        kind: "threshold",
        c: "",
        d: "n*log(n)",
        n0: 2,
        cert: Certificate::Diverges {
            from: 2,
            lower: inv_n_log_n,
            antiderivative: log_log,
            witness_log10: witness_log_log,
            argument: "terms 1/(n log n); integral log log n diverges",
        },
    },
    Preset {
        name: "nlog2n-threshold",
        summary: "a_n >= n log^2 n: finitely often",
        kind: "threshold",
        c: "",
        d: "n*log(n)^2",
        n0: 2,
        cert: Certificate::Converges {
            from: 2,
            upper: |x| 1.0 / (x * x.ln() * x.ln()),
            tail: |h| 1.0 / h.ln(),
            argument: "terms 1/(n log^2 n), decreasing; tail <= integral = 1/log H",
        },
    },
    Preset {
        name: "square-threshold",
        summary: "a_n >= n^2: finitely often",
        kind: "threshold",
        c: "",
        d: "n^2",
        n0: 1,
        cert: Certificate::Converges {
            from: 1,
            upper: |x| 1.0 / (x * x),
            tail: |h| 1.0 / h,
            argument: "terms 1/n^2; tail <= 1/H",
        },
    },
    Preset {
        name: "open-band-sqrt",
        summary: "n < a_n <= n + floor(sqrt(n)): finitely often",
        kind: "open_band",
        c: "sqrt(n)",
        d: "n",
        n0: 1,
        cert: Certificate::Converges {
            from: 1,
            upper: |x| x.powf(-1.5),
            tail: |h| 2.0 / h.sqrt(),
            argument: "c_n <= d_n always; terms n^-3/2; tail <= 2/sqrt(H)",
        },
    },
    Preset {
        name: "open-band-log",
        summary: "n < a_n <= n + floor(n/log n): infinitely often",
        kind: "open_band",
        c: "log(n)",
        d: "n",
        n0: 2,
        cert: Certificate::Diverges {
            from: 2,
            lower: inv_n_log_n,
            antiderivative: log_log,
            witness_log10: witness_log_log,
            argument: "c_n <= d_n for n >= 2; terms 1/(n log n); integral log log n diverges",
        },
    },
    Preset {
        name: "open-band-empty",
        summary: "n < a_n <= n + floor(n/n^2): empty from n = 2 on",
        kind: "open_band",
        c: "n^2",
        d: "n",
        n0: 1,
        cert: Certificate::Converges {
            from: 2,
            upper: |_| 0.0,
            tail: |_| 0.0,
            argument: "c_n > d_n for n >= 2, so every later term is excluded",
        },
    },
];

pub fn find_preset(family: &EventFamily) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.family().kind == family.kind)
}

fn ladder(horizon: u64) -> Vec<u64> {
    let mut out = vec![];
    let mut t = 10u64;
    while t < horizon {
        out.push(t);
        t *= 10;
    }
    out.push(horizon);
    out
}

pub fn series_verdict(
    family: &EventFamily,
    variant: CriterionVariant,
    horizon: u64,
    method: Method,
) -> Result<Verdict> {
    if horizon < 1000 {
        return Err(Error::config(format!("series_verdict needs horizon >= 1000, got {horizon}")));
    }
    let series = criterion_series(family, variant);
    let k = series.components.len();
    let stops = ladder(horizon);
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    let mut first_over: Option<u64> = None;
    let mut partial_sums = Vec::new();
    let mut stop = 0;
    let mut terms_at = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        let t = series.terms(n)?;
        let c: f64 = t.iter().sum();
        for (s, v) in sums.iter_mut().zip(&t) {
            *s += v;
        }
        total += c;
        terms_at.push(c);
        if first_over.is_none() && total >= DIVERGENCE_THRESHOLD {
            first_over = Some(n);
        }
        if n == stops[stop] {
            partial_sums.push(LadderPoint { n, sums: sums.clone() });
            stop += 1;
        }
    }
    let mut evidence = Evidence {
        horizon,
        method,
        partial_sums,
        preset: None,
        divergence_witness_log10: None,
        tail_bound: None,
        total_bound: None,
        notes: vec![],
    };

    let constant = match &family.kind {
        FamilyKind::Threshold { b } => b.constant_value().is_some(),
        FamilyKind::Equal { d } => d.constant_value().is_some(),
        FamilyKind::ClosedBand { c, d } | FamilyKind::OpenBand { c, d } => {
            c.constant_value().is_some() && d.constant_value().is_some()
        }
    };
    if constant {
        let t = series.combined(family.n0.max(1))?;
        evidence.notes.push("constant sequences: every term from n0 on is identical".into());
        if t > 0.0 {
            let witness = family.n0.max(1) as f64 - 1.0 + (DIVERGENCE_THRESHOLD / t).ceil();
            evidence.divergence_witness_log10 = Some(witness.log10());
            return Ok(Verdict {
                verdict: VerdictKind::AsInfinitelyOften,
                test: format!("constant positive terms {t}: partial sums pass {DIVERGENCE_THRESHOLD} by n = {witness}"),
                evidence,
            });
        }
        evidence.tail_bound = Some(0.0);
        evidence.total_bound = Some(total);
        return Ok(Verdict {
            verdict: VerdictKind::AsFinitelyOften,
            test: "constant terms equal to zero from n0 on".into(),
            evidence,
        });
    }

    let Some(preset) = find_preset(family) else {
        evidence.notes.push("no registered comparison bound for these expressions".into());
        return Ok(Verdict {
            verdict: VerdictKind::Inconclusive,
            test: "partial sums only; convergence is undecidable in general".into(),
            evidence,
        });
    };
    evidence.preset = Some(preset.name.to_string());

    match preset.cert {
        Certificate::Diverges { from, lower, antiderivative, witness_log10, argument } => {
            for n in from..=horizon {
                let l = lower(n as f64);
                if terms_at[n as usize - 1] < l * (1.0 - COMPARE_SLACK) {
                    evidence.notes.push(format!("comparison bound fails at n = {n}"));
                    return Ok(inconclusive(evidence));
                }
            }
            let w = match first_over {
                Some(n) => (n as f64).log10(),
                None => {
                    let target = DIVERGENCE_THRESHOLD - total + antiderivative(horizon as f64 + 1.0);
                    witness_log10(target)
                }
            };
            evidence.divergence_witness_log10 = Some(w);
            Ok(Verdict {
                verdict: VerdictKind::AsInfinitelyOften,
                test: format!("comparison with a divergent integral ({argument}); partial sums pass {DIVERGENCE_THRESHOLD} by n = 10^{}", fmt_exponent(w)),
                evidence,
            })
        }
        Certificate::Converges { from, upper, tail, argument } => {
            if method == Method::PartialSum {
                evidence.notes.push("convergence needs the integral test".into());
                return Ok(inconclusive(evidence));
            }
            for n in from..=horizon {
                let u = upper(n as f64);
                if terms_at[n as usize - 1] > u * (1.0 + COMPARE_SLACK) {
                    evidence.notes.push(format!("comparison bound fails at n = {n}"));
                    return Ok(inconclusive(evidence));
                }
            }
            let tb = tail(horizon as f64);
            evidence.tail_bound = Some(tb);
            evidence.total_bound = Some(total + tb);
            Ok(Verdict { verdict: VerdictKind::AsFinitelyOften, test: format!("integral test ({argument})"), evidence })
        }
    }
}

fn fmt_exponent(w: f64) -> String {
    if w < 1e6 {
        format!("{w:.3}")
    } else {
        format!("({w:.3e})")
    }
}

fn inconclusive(evidence: Evidence) -> Verdict {
    Verdict { verdict: VerdictKind::Inconclusive, test: "comparison bound not verified".into(), evidence }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hits {
    pub hit_times: Vec<u64>,
    /// `(T, N(T))`.
    pub counts: Vec<(u64, u64)>,
}

/// Counts `N(T)` at each `T` in the ascending `ladder`, given precomputed events.
pub fn count_hits(digits: impl IntoIterator<Item = Digit>, events: &[Option<DigitEvent>], ladder: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(ladder.len());
    let mut count = 0u64;
    let mut next = 0;
    for (i, a) in digits.into_iter().enumerate() {
        if next == ladder.len() {
            break;
        }
        if events.get(i).copied().flatten().is_some_and(|e| e.contains(a)) {
            count += 1;
        }
        while next < ladder.len() && ladder[next] == i as u64 + 1 {
            out.push(count);
            next += 1;
        }
    }
    out
}

/// Hit times and `N(T)` on the ladder `10, 100, ..., horizon`.
pub fn empirical_hits(digits: impl IntoIterator<Item = Digit>, family: &EventFamily, horizon: u64) -> Result<Hits> {
    let stops = ladder(horizon.max(1));
    let mut hit_times = vec![];
    let mut counts = vec![];
    let mut seen = 0u64;
    let mut stop = 0;
    for (i, a) in digits.into_iter().take(horizon as usize).enumerate() {
        let n = i as u64 + 1;
        if family.contains(n, a)? {
            hit_times.push(n);
        }
        seen = n;
        while stop < stops.len() && stops[stop] == n {
            counts.push((n, hit_times.len() as u64));
            stop += 1;
        }
    }
    if seen < horizon {
        return Err(Error::domain(format!("stream has {seen} digits, horizon is {horizon}")));
    }
    let small: Vec<(u64, u64)> = counts.into_iter().filter(|(t, _)| *t <= horizon).collect();
    Ok(Hits { hit_times, counts: small })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonSummary {
    pub t: u64,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub median: f64,
    pub min: u64,
    pub max: u64,
    /// Fraction of trajectories with no new hit since the previous horizon.
    pub stalled_fraction: f64,
    /// `Σ_{n ≤ T} γ(A_n)`.
    pub exact_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Increment {
    pub from: u64,
    pub to: u64,
    pub mean: f64,
    pub se: f64,
    pub exact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimsupStudy {
    pub family: EventFamily,
    pub mode: SampleMode,
    pub trials: usize,
    pub seed: u64,
    pub horizons: Vec<HorizonSummary>,
    pub increments: Vec<Increment>,
}

/// Distribution of `N(T)` across `trials` trajectories.
pub fn limsup_study(
    family: &EventFamily,
    horizons: &[u64],
    trials: usize,
    seed: u64,
    mode: SampleMode,
) -> Result<LimsupStudy> {
    if trials < 30 {
        return Err(Error::config(format!("limsup_study needs at least 30 trials, got {trials}")));
    }
    let mut hs: Vec<u64> = horizons.to_vec();
    hs.sort_unstable();
    hs.dedup();
    let Some(&top) = hs.last() else {
        return Err(Error::config("no horizons given"));
    };
    if hs[0] == 0 {
        return Err(Error::config("horizons must be positive"));
    }
    let events = family.events(top)?;
    let mut cum = Vec::with_capacity(top as usize);
    let mut acc = 0.0;
    for e in &events {
        acc += e.map_or(0.0, |e| e.measure());
        cum.push(acc);
    }
    let runs: Vec<Result<Vec<u64>>> = par_trajectories(seed, trials, |s: SeedSpec| {
        Ok(count_hits(sample_trajectory(s, top as usize, mode)?, &events, &hs))
    });
    let runs: Vec<Vec<u64>> = runs.into_iter().collect::<Result<_>>()?;

    let mut summaries = vec![];
    for (j, &t) in hs.iter().enumerate() {
        let mut col: Vec<u64> = runs.iter().map(|r| r[j]).collect();
        let m = Moments::of(col.iter().map(|&v| v as f64));
        let stalled = runs.iter().filter(|r| if j == 0 { r[0] == 0 } else { r[j] == r[j - 1] }).count();
        col.sort_unstable();
        let median =
            if trials % 2 == 1 { col[trials / 2] as f64 } else { (col[trials / 2 - 1] + col[trials / 2]) as f64 / 2.0 };
        summaries.push(HorizonSummary {
            t,
            mean: m.mean,
            sd: m.variance().sqrt(),
            se: m.se(),
            median,
            min: col[0],
            max: col[trials - 1],
            stalled_fraction: stalled as f64 / trials as f64,
            exact_mean: cum[t as usize - 1],
        });
    }
    let increments = (1..hs.len())
        .map(|j| {
            let m = Moments::of(runs.iter().map(|r| (r[j] - r[j - 1]) as f64));
            Increment {
                from: hs[j - 1],
                to: hs[j],
                mean: m.mean,
                se: m.se(),
                exact: cum[hs[j] as usize - 1] - cum[hs[j - 1] as usize - 1],
            }
        })
        .collect();
    Ok(LimsupStudy { family: family.clone(), mode, trials, seed, horizons: summaries, increments })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChandraCertificate {
    /// `q(1..=shown)`.
    pub q: Vec<f64>,
    /// `Σ_{m ≥ 1} q(m) = ψ(1) + ρ' / (1 - θ)`.
    pub sum: f64,
    /// Every `A_n` depends on `a_n` alone.
    pub single_digit_events: bool,
    pub certified: bool,
    pub note: String,
}

/// Summable weights `q(m) = ψ(m)` for the correlation condition of Chandra's lemma.
pub fn chandra_certificate(family: &EventFamily) -> ChandraCertificate {
    let c = MixingConstants::new();
    let q: Vec<f64> = (1..=20).map(psi_bound).collect();
    let sum = c.psi1 + c.rho_prime / (1.0 - c.theta);
    ChandraCertificate {
        q,
        sum,
        single_digit_events: true,
        certified: sum.is_finite(),
        note: format!(
            "{}: events are sigma(a_n)-measurable; |P(D_i D_j) - P(D_i)P(D_j)| <= psi(|i-j|) P(D_i) P(D_j) with summable psi",
            family.kind_name()
        ),
    }
}
