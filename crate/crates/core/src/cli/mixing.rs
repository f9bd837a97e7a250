use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cf_limits_lab::mixing_lab::{
    empirical_phi, empirical_psi1, eta_numeric, middle_regime_bound, phi_bound, profile_scan, psi_bound,
    MixingConstants,
};

use super::{csv_body, load_config, parse_list, CliError, CliResult, Output, Report, U64List};

const ETA_TOLERANCE: f64 = 1e-4;

#[derive(Args, Debug)]
pub struct MixingArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub grid_a: Option<usize>,
    #[arg(long)]
    pub grid_x: Option<usize>,
    /// Points of the (a, discrepancy) profile.
    #[arg(long)]
    pub profile_grid: Option<usize>,
    /// Largest digit used by the exact psi(1) and phi(1) estimators.
    #[arg(long)]
    pub k: Option<u64>,
    /// Comma-separated gaps n >= 2 for the Monte Carlo phi estimate.
    #[arg(long, value_parser = parse_list)]
    pub phi_n: Option<U64List>,
    #[arg(long)]
    pub phi_k: Option<u64>,
    #[arg(long)]
    pub phi_trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingConfig {
    pub grid_a: usize,
    pub grid_x: usize,
    pub profile_grid: usize,
    pub k: u64,
    pub phi_n: Vec<u64>,
    pub phi_k: u64,
    pub phi_trials: usize,
    pub seed: u64,
}

impl Default for MixingConfig {
    fn default() -> Self {
        MixingConfig {
            grid_a: 2001,
            grid_x: 2001,
            profile_grid: 101,
            k: 100,
            phi_n: vec![2, 3, 4],
            phi_k: 5,
            phi_trials: 20_000,
            seed: 1,
        }
    }
}

pub fn run(a: MixingArgs, out: &Output) -> CliResult<()> {
    let mut cfg: MixingConfig = load_config(a.config.as_deref())?;
    cfg.grid_a = a.grid_a.unwrap_or(cfg.grid_a);
    cfg.grid_x = a.grid_x.unwrap_or(cfg.grid_x);
    cfg.profile_grid = a.profile_grid.unwrap_or(cfg.profile_grid);
    cfg.k = a.k.unwrap_or(cfg.k);
    cfg.phi_n = a.phi_n.clone().map(|l| l.0).unwrap_or(cfg.phi_n);
    cfg.phi_k = a.phi_k.unwrap_or(cfg.phi_k);
    cfg.phi_trials = a.phi_trials.unwrap_or(cfg.phi_trials);
    cfg.seed = a.seed.unwrap_or(cfg.seed);

    let c = MixingConstants::new();
    let numeric = eta_numeric(cfg.grid_a, cfg.grid_x)?;
    let profile = profile_scan(cfg.profile_grid)?;
    let psi1 = empirical_psi1(cfg.k)?;
    let mut phis = vec![empirical_phi(1, cfg.k, 0, cfg.seed)?];
    for &n in cfg.phi_n.iter().filter(|&&n| n >= 2) {
        phis.push(empirical_phi(n as u32, cfg.phi_k, cfg.phi_trials, cfg.seed)?);
    }
    let bounds: Vec<(u32, f64, f64)> = (1..=8).map(|n| (n, psi_bound(n), phi_bound(n))).collect();

    let mut text = format!(
        "eta {:.7}\npsi1 {:.7}\ntheta {}\nrho' {:.7}\neta_numeric {:.7} (grid {}x{}, argmax a = {})\nmiddle-regime bound {:.5}\n",
        c.eta, c.psi1, c.theta, c.rho_prime, numeric.value, cfg.grid_a, cfg.grid_x, numeric.argmax_a, middle_regime_bound()
    );
    let _ = writeln!(text, "empirical psi(1), K = {}: {:.7}", cfg.k, psi1.value);
    for p in &phis {
        let _ = writeln!(
            text,
            "empirical phi({}), K = {}: {:.7} +- {:.7} (bound {:.7})",
            p.n,
            p.k,
            p.value,
            p.se,
            phi_bound(p.n)
        );
    }
    let csv = csv_body(
        "a,regime,x1,x2,signed,magnitude",
        profile.iter().map(|p| {
            let o = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let regime =
                serde_json::to_value(p.regime).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            format!("{},{regime},{},{},{},{}", p.a, o(p.x1), o(p.x2), p.signed, p.magnitude)
        }),
    );
    let json = serde_json::json!({
        "constants": c,
        "eta_numeric": numeric,
        "middle_regime_bound": middle_regime_bound(),
        "bounds": bounds,
        "empirical_psi1": psi1,
        "empirical_phi": phis,
        "profile": profile,
    });
    out.emit(Report { config: &cfg, json: &json, text, csv: Some(csv) })?;

    let mut failures = vec![];
    if (numeric.value - c.eta).abs() > ETA_TOLERANCE {
        failures.push(format!("eta_numeric {} differs from eta {} by more than {ETA_TOLERANCE}", numeric.value, c.eta));
    }
    if psi1.value > c.psi1 + 1e-9 {
        failures.push(format!("empirical psi(1) {} exceeds 2 log 2 - 1", psi1.value));
    }
    if phis[0].value > c.eta + 1e-9 {
        failures.push(format!("empirical phi(1) {} exceeds eta", phis[0].value));
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::SelfCheck(failures.join("; ")))
    }
}
