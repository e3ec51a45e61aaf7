//! Command-line driver: configuration layering, subcommand dispatch and
//! output files.
//!
//! Configuration is resolved as defaults < `--config` file < `--set`
//! overrides < dedicated flags (`--seed`, `--t-end`, ...).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use thiserror::Error;

use sedsim::config::{FieldMode, RunConfig};
use sedsim::error::ConfigError;

mod commands;
mod output;

pub use commands::dispatch;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    /// A self-check ran to completion but missed its tolerance.
    pub const CHECK_FAILED: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("numerical event: {0}")]
    Numerical(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => exit::VALIDATION,
            CliError::Io { .. } => exit::IO,
            CliError::Numerical(_) => exit::NUMERICAL,
            CliError::CheckFailed(_) => exit::CHECK_FAILED,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sedsim", version, about = "Classical hydrogen in zero-point radiation")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Explicit seed list, e.g. 1,2,3.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true, value_name = "SECONDS")]
    pub t_end: Option<f64>,
    /// Snapshot times in seconds, e.g. 1.417e-12,4.5e-12.
    #[arg(long, global = true, value_delimiter = ',', value_name = "T1,T2,...")]
    pub snapshots: Option<Vec<f64>>,
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
    #[arg(long, global = true, value_name = "window|full")]
    pub field_mode: Option<FieldMode>,
    /// Dotted config key and JSON value, e.g. cavity.l_z=4.085e-5 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Multi-seed campaign with snapshot densities.
    Run,
    /// Fields off: radiative collapse from a_B against the r³ law.
    Decay {
        /// Stopping radius in Å.
        #[arg(long, default_value_t = 0.12)]
        r_stop: f64,
        /// Spacing of the r³ samples used in the fit (s).
        #[arg(long, default_value_t = 1.0e-14)]
        sample_interval: f64,
    },
    /// Fields and radiation reaction off: conservation over many orbits.
    Kepler {
        #[arg(long, default_value_t = 100.0)]
        orbits: f64,
    },
    /// Sample moments of the mode coefficients.
    Fieldstats {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        n_start: u64,
        #[arg(long, default_value_t = 100_000)]
        modes: u64,
    },
    /// Windowed against full summation on a short cavity.
    Bench {
        /// Cavity length along z (cm).
        #[arg(long, default_value_t = 4.085e-5)]
        bench_lz: f64,
        #[arg(long, default_value_t = 1.0e-14)]
        horizon: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Raw mode coefficients as CSV.
    DumpModes {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        n_start: u64,
        #[arg(long, default_value_t = 1000)]
        modes: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Decay { .. } => "decay",
            Command::Kepler { .. } => "kepler",
            Command::Fieldstats { .. } => "fieldstats",
            Command::Bench { .. } => "bench",
            Command::DumpModes { .. } => "dump-modes",
        }
    }
}

/// Everything a subcommand needs after parsing.
#[derive(Debug, Clone)]
pub struct CommandSpec {
    pub command: Command,
    pub config: RunConfig,
    pub config_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub workers: usize,
    /// No config file, no overrides and no flags touching the config.
    pub defaults: bool,
}

const ALIASES: &[(&str, &str)] = &[("f", "window_fraction")];

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), ConfigError> {
    let key = ALIASES.iter().find(|(a, _)| *a == key).map_or(key, |(_, k)| k);
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::new(key, "not a configuration section"))?;
        if !obj.contains_key(*part) {
            return Err(ConfigError::new(key, "unknown configuration key"));
        }
        if i + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        node = obj.get_mut(*part).expect("key checked above");
    }
    unreachable!("split yields at least one part")
}

/// Applies `key=value` overrides to `config`. Values are parsed as JSON,
/// falling back to a plain string.
pub fn apply_overrides(config: &RunConfig, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut tree = serde_json::to_value(config).expect("config serializes");
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::new(item.as_str(), "expected key=value"))?;
        let key = key.trim();
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        set_path(&mut tree, key, value)?;
    }
    serde_json::from_value(tree).map_err(|e| ConfigError::new("set", e.to_string()))
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())).into())
}

/// Resolves the effective configuration and validates it.
pub fn parse_and_validate<I, T>(argv: I) -> Result<CommandSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Usage(e.render().to_string()),
    })?;
    spec_from_cli(cli)
}

pub fn spec_from_cli(cli: Cli) -> Result<CommandSpec, CliError> {
    let c = cli.common;
    let mut config = match &c.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    config = apply_overrides(&config, &c.overrides)?;
    let mut flagged = false;
    if let Some(seed) = c.seed {
        config.seed = seed;
        config.seeds.clear();
        flagged = true;
    }
    if let Some(seeds) = c.seeds {
        config.seeds = seeds;
        flagged = true;
    }
    if let Some(runs) = c.runs {
        config.runs = runs;
        flagged = true;
    }
    if let Some(t) = c.t_end {
        config.t_end = t;
        flagged = true;
    }
    if let Some(s) = c.snapshots {
        config.snapshot_times = s;
        flagged = true;
    }
    if let Some(m) = c.field_mode {
        config.field_mode = m;
        flagged = true;
    }
    config.validate()?;
    let workers = match c.workers {
        Some(w) => w as usize,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(CommandSpec {
        defaults: c.config.is_none() && c.overrides.is_empty() && !flagged,
        command: cli.command,
        config,
        config_path: c.config,
        out_dir: c.out,
        overrides: c.overrides,
        workers,
    })
}

/// Parses, dispatches and maps the outcome to an exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::VALIDATION } else { exit::OK };
        }
    };
    let result = spec_from_cli(cli).and_then(|spec| dispatch(&spec));
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
