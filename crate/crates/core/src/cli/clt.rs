use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cf_limits_lab::clt_lab::{clt_experiment, DEFAULT_EPSILON};
use cf_limits_lab::digit_sampler::SampleMode;

use super::{csv_body, load_config, parse_list, CliResult, FamilyArgs, FamilySpec, Output, Report, U64List};

/// K-S distance reported as the target for the largest n.
const KS_TARGET: f64 = 0.02;

#[derive(Args, Debug)]
pub struct CltArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Comma-separated values of n, all simulated on one seed bank.
    #[arg(long, value_parser = parse_list)]
    pub n: Option<U64List>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<SampleMode>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltConfig {
    pub family: Option<FamilySpec>,
    pub n: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub mode: SampleMode,
    pub epsilon: f64,
}

impl Default for CltConfig {
    fn default() -> Self {
        CltConfig {
            family: None,
            n: vec![200, 2000],
            trials: 5000,
            seed: 1,
            mode: SampleMode::Exact,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

pub fn run(a: CltArgs, out: &Output) -> CliResult<()> {
    let mut cfg: CltConfig = load_config(a.config.as_deref())?;
    cfg.family = Some(a.family.merge(cfg.family.take())?);
    cfg.n = a.n.clone().map(|l| l.0).unwrap_or(cfg.n);
    cfg.trials = a.trials.unwrap_or(cfg.trials);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.mode = a.mode.unwrap_or(cfg.mode);
    cfg.epsilon = a.epsilon.unwrap_or(cfg.epsilon);

    let family = cfg.family.as_ref().expect("merged").resolve()?;
    let exp = clt_experiment(&family, &cfg.n, cfg.trials, cfg.seed, cfg.mode, cfg.epsilon)?;
    let c = &exp.constants;
    let mut text = format!(
        "family: {}\nrho {:.7}  eta {:.7}  theta {}  rho' {:.7}  epsilon {}\n",
        family.describe(),
        c.rho,
        c.eta,
        c.theta,
        c.rho_prime,
        cfg.epsilon
    );
    let r = &exp.conditions;
    let _ = writeln!(
        text,
        "threshold condition: {} (violations {}, last {:?})\ndivergence condition: {} ({})",
        ok(r.threshold_ok),
        r.violations,
        r.last_violation,
        ok(r.divergence_ok),
        r.divergence_test
    );
    let _ = writeln!(text, "n\texact mean\tmc mean\tse\tmc var\tvar bound\tks");
    for res in &exp.results {
        let _ = writeln!(
            text,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.5}",
            res.n, res.exact_mean, res.mc_mean, res.mc_se, res.mc_variance, res.variance_lower_bound, res.ks_distance
        );
    }
    if let Some(last) = exp.results.last() {
        let met = if last.ks_distance < KS_TARGET { "met" } else { "missed" };
        let _ = writeln!(text, "ks target {KS_TARGET} at n = {}: {met}", last.n);
    }
    let csv = csv_body(
        "n,trajectory_rank,z",
        exp.results
            .iter()
            .flat_map(|res| res.standardized.iter().enumerate().map(move |(i, z)| format!("{},{i},{z}", res.n))),
    );
    let json = serde_json::json!({
        "constants": exp.constants,
        "conditions": exp.conditions,
        "family": exp.family,
        "mode": exp.mode,
        "trials": exp.trials,
        "seed": exp.seed,
        "epsilon": exp.epsilon,
        "ks_target": KS_TARGET,
        "results": exp.results,
    });
    out.emit(Report { config: &cfg, json: &json, text, csv: Some(csv) })
}

fn ok(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}
