use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cf_limits_lab::gauss_measure::DigitEvent;
use cf_limits_lab::Error;

use super::{csv_body, load_config, CliResult, FamilyArgs, FamilySpec, Output, Report};

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long)]
    pub from: Option<u64>,
    #[arg(long)]
    pub to: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    pub family: Option<FamilySpec>,
    pub from: u64,
    pub to: u64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig { family: None, from: 1, to: 10 }
    }
}

#[derive(Serialize)]
struct Row {
    n: u64,
    event: Option<DigitEvent>,
    gamma: f64,
}

pub fn run(a: MeasureArgs, out: &Output) -> CliResult<()> {
    let mut cfg: MeasureConfig = load_config(a.config.as_deref())?;
    cfg.family = Some(a.family.merge(cfg.family.take())?);
    cfg.from = a.from.unwrap_or(cfg.from);
    cfg.to = a.to.unwrap_or(cfg.to);
    if cfg.from < 1 || cfg.to < cfg.from {
        return Err(Error::Config(format!("need 1 <= from <= to, got {}..{}", cfg.from, cfg.to)).into());
    }
    let family = cfg.family.as_ref().map(FamilySpec::resolve).transpose()?.expect("merged");
    let mut rows = Vec::new();
    for n in cfg.from..=cfg.to {
        let event = family.event(n)?;
        rows.push(Row { n, event, gamma: event.map_or(0.0, |e| e.measure()) });
    }
    let mut text = format!("# {}\nn\tgamma(A_n)\n", family.describe());
    for r in &rows {
        let _ = writeln!(text, "{}\t{:.10}", r.n, r.gamma);
    }
    let csv = csv_body("n,gamma", rows.iter().map(|r| format!("{},{}", r.n, r.gamma)));
    let json = serde_json::json!({ "family": family, "rows": rows });
    out.emit(Report { config: &cfg, json: &json, text, csv: Some(csv) })
}
