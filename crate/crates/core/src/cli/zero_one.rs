use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cf_limits_lab::digit_sampler::SampleMode;
use cf_limits_lab::zero_one::{
    chandra_certificate, criterion_series, limsup_study, series_verdict, CriterionVariant, Method, VerdictKind,
};

use super::{csv_body, load_config, parse_list, CliResult, FamilyArgs, FamilySpec, Output, Report, U64List};

#[derive(Args, Debug)]
pub struct ZeroOneArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Partial sums are evaluated up to this index.
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long, value_parser = ["partial_sum", "integral_test"])]
    pub method: Option<String>,
    #[arg(long, value_parser = ["zero_one", "clt"])]
    pub variant: Option<String>,
    /// Also run the hit-count study.
    #[arg(long)]
    pub study: bool,
    /// Comma-separated study horizons.
    #[arg(long, value_parser = parse_list)]
    pub horizons: Option<U64List>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<SampleMode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeroOneConfig {
    pub family: Option<FamilySpec>,
    pub horizon: u64,
    pub method: Method,
    pub variant: CriterionVariant,
    pub study: bool,
    pub horizons: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub mode: SampleMode,
}

impl Default for ZeroOneConfig {
    fn default() -> Self {
        ZeroOneConfig {
            family: None,
            horizon: 100_000,
            method: Method::IntegralTest,
            variant: CriterionVariant::ZeroOne,
            study: false,
            horizons: vec![1000, 10_000, 100_000],
            trials: 200,
            seed: 1,
            mode: SampleMode::Mixture,
        }
    }
}

pub fn run(a: ZeroOneArgs, out: &Output) -> CliResult<()> {
    let mut cfg: ZeroOneConfig = load_config(a.config.as_deref())?;
    cfg.family = Some(a.family.merge(cfg.family.take())?);
    cfg.horizon = a.horizon.unwrap_or(cfg.horizon);
    if let Some(m) = &a.method {
        cfg.method = serde_json::from_value(serde_json::Value::String(m.clone()))?;
    }
    if let Some(v) = &a.variant {
        cfg.variant = serde_json::from_value(serde_json::Value::String(v.clone()))?;
    }
    cfg.study |= a.study;
    cfg.horizons = a.horizons.clone().map(|l| l.0).unwrap_or(cfg.horizons);
    cfg.trials = a.trials.unwrap_or(cfg.trials);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.mode = a.mode.unwrap_or(cfg.mode);

    let family = cfg.family.as_ref().expect("merged").resolve()?;
    for w in family.validate(cfg.horizon.min(1000))? {
        eprintln!("warning: {w}");
    }
    let series = criterion_series(&family, cfg.variant);
    let verdict = series_verdict(&family, cfg.variant, cfg.horizon, cfg.method)?;
    if verdict.verdict == VerdictKind::Inconclusive {
        eprintln!("warning: verdict is INCONCLUSIVE; partial sums are reported as evidence only");
    }
    let chandra = chandra_certificate(&family);
    let study =
        if cfg.study { Some(limsup_study(&family, &cfg.horizons, cfg.trials, cfg.seed, cfg.mode)?) } else { None };

    let verdict_name = serde_json::to_value(verdict.verdict)?.as_str().unwrap_or_default().to_string();
    let mut text = format!("family: {}\nverdict: {verdict_name}\ntest: {}\n", family.describe(), verdict.test);
    let labels: Vec<&str> = series.components.iter().map(|c| c.term.as_str()).collect();
    let _ = writeln!(text, "N\t{}", labels.join("\t"));
    for p in &verdict.evidence.partial_sums {
        let sums: Vec<String> = p.sums.iter().map(|s| format!("{s:.6}")).collect();
        let _ = writeln!(text, "{}\t{}", p.n, sums.join("\t"));
    }
    if let Some(t) = verdict.evidence.total_bound {
        let _ = writeln!(text, "series total <= {t:.9}");
    }
    let _ = writeln!(text, "chandra weights sum: {:.7}", chandra.sum);
    let mut rows = vec![];
    if let Some(s) = &study {
        let _ = writeln!(text, "T\tmean N(T)\tsd\tmedian\tmin\tmax\tstalled\texact mean");
        for h in &s.horizons {
            let _ = writeln!(
                text,
                "{}\t{:.3}\t{:.3}\t{}\t{}\t{}\t{:.3}\t{:.3}",
                h.t, h.mean, h.sd, h.median, h.min, h.max, h.stalled_fraction, h.exact_mean
            );
            rows.push(format!(
                "{},{},{},{},{},{},{},{},{}",
                h.t, h.mean, h.sd, h.se, h.median, h.min, h.max, h.stalled_fraction, h.exact_mean
            ));
        }
    }
    let csv = study.is_some().then(|| csv_body("t,mean,sd,se,median,min,max,stalled_fraction,exact_mean", rows));
    let json = serde_json::json!({
        "family": family,
        "criterion_series": series,
        "verdict": verdict,
        "chandra": chandra,
        "study": study,
    });
    out.emit(Report { config: &cfg, json: &json, text, csv })
}
