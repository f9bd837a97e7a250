//! Command-line front end.

mod clt;
mod digits;
mod measure;
mod mixing;
mod sample;
mod zero_one;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use cf_limits_lab::zero_one::EventFamily;

use cf_limits_lab::Error;

pub const CSV_HEADER: &str = "# cf-limits-lab v1";
pub const OUT_ENV: &str = "CF_LIMITS_LAB_OUT";

#[derive(Parser, Debug)]
#[command(name = "cf-limits-lab", version, about = "Continued-fraction digits under the Gauss measure")]
pub struct Cli {
    /// Worker threads for Monte Carlo runs (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory for result files; defaults to $CF_LIMITS_LAB_OUT, else no files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// File stem for result files (default: the command name).
    #[arg(long, global = true)]
    pub name: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Continued-fraction digits and convergents of a fraction or a float.
    Digits(digits::DigitsArgs),
    /// Gauss measure of the events of a family, index by index.
    Measure(measure::MeasureArgs),
    /// Sample digit trajectories.
    Sample(sample::SampleArgs),
    /// Series verdict and hit-count study for a limsup event family.
    ZeroOne(zero_one::ZeroOneArgs),
    /// Conditions and Monte Carlo normality of the counting process S_n.
    Clt(clt::CltArgs),
    /// Mixing constants, discrepancy profile and empirical coefficients.
    Mixing(mixing::MixingArgs),
}

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    SelfCheck(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(Error::Json(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::Precondition(_)) => 3,
            CliError::Lib(Error::Io(_)) => 1,
            CliError::Lib(_) => 2,
            CliError::SelfCheck(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::SelfCheck(m) => write!(f, "self-check failed: {m}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Where and how results go.
pub struct Output {
    pub dir: Option<PathBuf>,
    pub stem: String,
    pub format: Format,
}

/// One command's results in every supported shape.
pub struct Report<'a, T: Serialize> {
    pub config: &'a dyn ErasedConfig,
    pub json: &'a T,
    pub text: String,
    /// Rows after the header line, including the column line.
    pub csv: Option<String>,
}

/// Object-safe view of a resolved config for the metadata file.
pub trait ErasedConfig {
    fn to_value(&self) -> serde_json::Value;
}

impl<T: Serialize> ErasedConfig for T {
    fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

pub fn csv_body(columns: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("{CSV_HEADER}\n{columns}\n");
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

impl Output {
    pub fn emit<T: Serialize>(&self, report: Report<'_, T>) -> CliResult<()> {
        let json = serde_json::to_string_pretty(report.json)? + "\n";
        match self.format {
            Format::Text => print!("{}", report.text),
            Format::Json => print!("{json}"),
            Format::Csv => match &report.csv {
                Some(c) => print!("{c}"),
                None => print!("{json}"),
            },
        }
        if let Some(dir) = &self.dir {
            std::fs::create_dir_all(dir)?;
            write_file(&dir.join(format!("{}.json", self.stem)), &json)?;
            if let Some(c) = &report.csv {
                write_file(&dir.join(format!("{}.csv", self.stem)), c)?;
            }
            let meta = serde_json::json!({
                "tool": "cf-limits-lab",
                "version": env!("CARGO_PKG_VERSION"),
                "command": self.stem,
                "config": report.config.to_value(),
                "threads": rayon::current_num_threads(),
                "unix_time": std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            });
            write_file(&dir.join(format!("{}.meta.json", self.stem)), &(serde_json::to_string_pretty(&meta)? + "\n"))?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Reads a JSON manifest, or the default when no path is given.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let s = std::fs::read_to_string(p)?;
            let mut v: serde_json::Value = serde_json::from_str(&s)?;
            // manifests may name their command; it is informational only
            if let Some(obj) = v.as_object_mut() {
                obj.remove("command");
            }
            Ok(serde_json::from_value(v)?)
        }
    }
}

/// Family selection shared by the commands that take one.
#[derive(Args, Debug, Clone, Default)]
pub struct FamilyArgs {
    /// Registered family, e.g. sqrt-nlogn-equal.
    #[arg(long)]
    pub preset: Option<String>,
    /// Family as JSON, e.g. '{"kind":"threshold","b":"2"}'.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_parser = ["threshold", "equal", "closed_band", "open_band"])]
    pub kind: Option<String>,
    /// Threshold sequence b_n.
    #[arg(long)]
    pub b: Option<String>,
    /// Band ratio sequence c_n.
    #[arg(long)]
    pub c: Option<String>,
    /// Target sequence d_n.
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub n0: Option<u64>,
}

/// Family as it appears in a config file: either a preset name or the full object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Preset { preset: String },
    Family(EventFamily),
}

impl FamilySpec {
    pub fn resolve(&self) -> CliResult<EventFamily> {
        Ok(match self {
            FamilySpec::Preset { preset } => EventFamily::preset(preset)?,
            FamilySpec::Family(f) => f.clone(),
        })
    }
}

impl FamilyArgs {
    /// Flags override the config file's family.
    pub fn merge(&self, from_config: Option<FamilySpec>) -> CliResult<FamilySpec> {
        let mut spec = from_config;
        if let Some(p) = &self.preset {
            spec = Some(FamilySpec::Preset { preset: p.clone() });
        }
        if let Some(j) = &self.family {
            spec = Some(FamilySpec::Family(EventFamily::from_json(j)?));
        }
        if let Some(kind) = &self.kind {
            let need = |v: &Option<String>, what: &str| {
                v.clone().ok_or_else(|| Error::Config(format!("--kind {kind} needs --{what}")))
            };
            let f = match kind.as_str() {
                "threshold" => EventFamily::threshold(&need(&self.b, "b")?)?,
                "equal" => EventFamily::equal(&need(&self.d, "d")?)?,
                "closed_band" => EventFamily::closed_band(&need(&self.c, "c")?, &need(&self.d, "d")?)?,
                _ => EventFamily::open_band(&need(&self.c, "c")?, &need(&self.d, "d")?)?,
            };
            spec = Some(FamilySpec::Family(f));
        }
        let mut spec = spec
            .ok_or_else(|| Error::Config("no event family: use --preset, --family, --kind or a config file".into()))?;
        if let Some(n0) = self.n0 {
            spec = FamilySpec::Family(spec.resolve()?.starting_at(n0));
        }
        Ok(spec)
    }
}

/// Comma-separated integers, e.g. `1000,10000,1e5`.
#[derive(Clone, Debug)]
pub struct U64List(pub Vec<u64>);

pub fn parse_list(s: &str) -> Result<U64List, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<u64>()
                .or_else(|_| {
                    t.parse::<f64>().ok().filter(|v| v.fract() == 0.0 && *v >= 0.0).map(|v| v as u64).ok_or(())
                })
                .map_err(|_| format!("'{t}' is not a non-negative integer"))
        })
        .collect::<Result<_, _>>()
        .map(U64List)
}

pub fn run(cli: Cli) -> CliResult<()> {
    let name = match &cli.command {
        Command::Digits(_) => "digits",
        Command::Measure(_) => "measure",
        Command::Sample(_) => "sample",
        Command::ZeroOne(_) => "zero-one",
        Command::Clt(_) => "clt",
        Command::Mixing(_) => "mixing",
    };
    let out = Output {
        dir: cli.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)),
        stem: cli.name.clone().unwrap_or_else(|| name.to_string()),
        format: cli.format,
    };
    match cli.command {
        Command::Digits(a) => digits::run(a, &out),
        Command::Measure(a) => measure::run(a, &out),
        Command::Sample(a) => sample::run(a, &out),
        Command::ZeroOne(a) => zero_one::run(a, &out),
        Command::Clt(a) => clt::run(a, &out),
        Command::Mixing(a) => mixing::run(a, &out),
    }
}
