use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cf_limits_lab::cf_core::Digit;
use cf_limits_lab::digit_sampler::{par_trajectories, sample_trajectory, write_binary, SampleMode};
use cf_limits_lab::{Error, Result};

use super::{csv_body, load_config, CliResult, Output, Report};

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// exact, mixture, float, hp:BITS, gamma:A or luroth.
    #[arg(long)]
    pub mode: Option<SampleMode>,
    /// Digits per trajectory.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the first trajectory in the binary digit format.
    #[arg(long)]
    pub binary: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub mode: SampleMode,
    pub n: usize,
    pub count: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { mode: SampleMode::Exact, n: 20, count: 1, seed: 1 }
    }
}

pub fn run(a: SampleArgs, out: &Output) -> CliResult<()> {
    let mut cfg: SampleConfig = load_config(a.config.as_deref())?;
    cfg.mode = a.mode.unwrap_or(cfg.mode);
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.count = a.count.unwrap_or(cfg.count);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    if cfg.count == 0 {
        return Err(Error::Config("--count must be at least 1".into()).into());
    }
    let runs: Vec<Result<Vec<Digit>>> =
        par_trajectories(cfg.seed, cfg.count, |s| Ok(sample_trajectory(s, cfg.n, cfg.mode)?.collect()));
    let runs: Vec<Vec<Digit>> = runs.into_iter().collect::<Result<_>>()?;
    if let Some(path) = &a.binary {
        write_binary(std::fs::File::create(path)?, &runs[0])?;
    }
    let line = |r: &Vec<Digit>| r.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ");
    let text: String = runs.iter().map(|r| line(r) + "\n").collect();
    let csv = csv_body(
        "trajectory,n,digit",
        runs.iter().enumerate().flat_map(|(t, r)| r.iter().enumerate().map(move |(i, d)| format!("{t},{},{d}", i + 1))),
    );
    let json = serde_json::json!({ "mode": cfg.mode, "seed": cfg.seed, "trajectories": runs });
    out.emit(Report { config: &cfg, json: &json, text, csv: Some(csv) })
}
