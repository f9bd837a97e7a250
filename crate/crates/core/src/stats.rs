//! Small statistics toolkit shared by the experiments.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

/// Standard normal distribution function, `erfc(-z/√2)/2`.
///
/// `statrs`' `erfc` is a port of the Boost rational approximations, accurate
/// to a few ulps, far inside the `1e-10` absolute error budget.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Running count, mean and centred second moment; merges associatively.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, o: &Moments) -> Moments {
        if self.n == 0 {
            return *o;
        }
        if o.n == 0 {
            return *self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let mean = self.mean + d * o.n as f64 / n as f64;
        let m2 = self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        Moments { n, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn of(xs: impl IntoIterator<Item = f64>) -> Moments {
        let mut m = Moments::default();
        for x in xs {
            m.push(x);
        }
        m
    }
}

/// `sup_z |F_n(z) - F(z)|` over both one-sided limits of the empirical CDF.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let f = cdf(sorted[i]);
        d = d.max((f - i as f64 / n).abs()).max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

pub fn ks_normal(sorted: &[f64]) -> f64 {
    ks_distance(sorted, normal_cdf)
}

/// Right-continuous empirical CDF at the distinct sample values.
pub fn ecdf(sorted: &[f64]) -> Vec<(f64, f64)> {
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

fn chi_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map(|c| c.sf(stat)).unwrap_or(f64::NAN)
}

/// Pearson goodness of fit of `counts` to `probs` (same length, probs sum to 1).
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> ChiSquare {
    let n: u64 = counts.iter().sum();
    let statistic = counts
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let df = probs.iter().filter(|&&p| p > 0.0).count().saturating_sub(1);
    ChiSquare { statistic, df, p_value: chi_sf(statistic, df) }
}

/// Two-sample chi-square homogeneity test on binned counts.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquare {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (ka, kb) = ((nb as f64 / na as f64).sqrt(), (na as f64 / nb as f64).sqrt());
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        bins += 1;
        statistic += (x as f64 * ka - y as f64 * kb).powi(2) / (x + y) as f64;
    }
    let df = bins.saturating_sub(1);
    ChiSquare { statistic, df, p_value: chi_sf(statistic, df) }
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
pub fn batch_means_se(series: &[f64], batches: usize) -> f64 {
    let len = series.len() / batches;
    let means = Moments::of((0..batches).map(|b| series[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64));
    means.se()
}

/// Equal-width histogram over `[lo, hi)`; values outside are clamped into the end bins.
pub fn histogram(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, u64)> {
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &x in xs {
        let i = ((x - lo) / w).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[i] += 1;
    }
    counts.into_iter().enumerate().map(|(i, c)| (lo + i as f64 * w, lo + (i + 1) as f64 * w, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn normal_cdf_against_quadrature() {
        let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for &z in &[0.3, 1.0, 1.959964, 2.5, 4.0] {
            let q = 0.5 + simpson(phi, 0.0, z, 2000);
            assert!((normal_cdf(z) - q).abs() < 1e-10, "{z}");
        }
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959964) - 0.975).abs() < 1e-6);
    }

    #[test]
    fn ks_of_single_point() {
        // one sample at 0: F jumps 0 -> 1 where Φ = 1/2
        assert!((ks_normal(&[0.0]) - 0.5).abs() < 1e-15);
        let e = ecdf(&[1.0, 1.0, 2.0]);
        assert_eq!(e, vec![(1.0, 2.0 / 3.0), (2.0, 1.0)]);
    }

    #[test]
    fn chi_square_reference_values() {
        // X² = 3.84146 at df 1 is the 5% point
        let c = ChiSquare { statistic: 3.841458820694124, df: 1, p_value: chi_sf(3.841458820694124, 1) };
        assert!((c.p_value - 0.05).abs() < 1e-9);
        let t = chi_square_two_sample(&[10, 20, 30], &[10, 20, 30]);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.df, 2);
        let g = chi_square_gof(&[50, 50], &[0.5, 0.5]);
        assert_eq!(g.statistic, 0.0);
        assert_eq!(g.p_value, 1.0);
    }

    #[test]
    fn histogram_clamps() {
        let h = histogram(&[-10.0, 0.1, 0.9, 10.0], 0.0, 1.0, 2);
        assert_eq!(h[0].2, 2);
        assert_eq!(h[1].2, 2);
    }

    proptest! {
        #[test]
        fn normal_symmetry(z in -8.0f64..8.0) {
            prop_assert!((normal_cdf(z) - (1.0 - normal_cdf(-z))).abs() < 1e-15);
        }

        #[test]
        fn moments_merge_is_associative(xs in prop::collection::vec(-1e3f64..1e3, 0..60), cut in 0usize..60) {
            let cut = cut.min(xs.len());
            let whole = Moments::of(xs.iter().copied());
            let merged = Moments::of(xs[..cut].iter().copied()).merge(&Moments::of(xs[cut..].iter().copied()));
            prop_assert_eq!(whole.n, merged.n);
            prop_assert!((whole.mean - merged.mean).abs() < 1e-9);
            prop_assert!((whole.m2 - merged.m2).abs() < 1e-6 * (1.0 + whole.m2));
        }
    }
}
