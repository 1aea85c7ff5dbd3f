mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;
use crate::config::FileConfig;

/// Reproducible image degradation, severity calibration and benchmark generation.
#[derive(Debug, Parser)]
#[command(name = "imdeg", version)]
struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure mean strength per native level and write a calibration file.
    Calibrate(CalibrateArgs),
    /// Degrade one image at a native or canonical severity.
    Apply(ApplyArgs),
    /// Build a degraded dataset and its manifest.
    Generate(GenerateArgs),
    /// Severity table from a manifest or calibration files.
    Report(ReportArgs),
    /// Check the taxonomy registry and parameter schedule.
    Validate(ValidateArgs),
    /// List operators available in this build.
    List(ListArgs),
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed '{s}': {e}"))
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Reference image file or directory.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Use N procedural images instead of --input.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Side length of procedural images.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub term: Option<String>,
    /// psnr, 1-ssim or external:<name>.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Extrapolated canonical levels to store past level 5.
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Extrapolation step: last-step or mean-step.
    #[arg(long)]
    pub delta: Option<String>,
    /// Per-output scores for an external metric.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Calibration file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub term: Option<String>,
    /// Native level 1..5, or canonical level k >= 1 with --mode canonical.
    #[arg(long)]
    pub severity: Option<usize>,
    /// native or canonical.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub schedule: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Directory of source images.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// round_robin, cartesian, chain_factorial or random_chains.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Backends whose operators are used (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    pub backend: Vec<String>,
    /// Operators, optionally as backend:term; order is the chain order.
    #[arg(long, value_delimiter = ',')]
    pub term: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<u8>,
    /// Chain length for random_chains.
    #[arg(long)]
    pub k: Option<usize>,
    /// Metrics measured per output and stored in the manifest.
    #[arg(long, value_delimiter = ',')]
    pub metric: Vec<String>,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub schedule: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Manifest (.jsonl), calibration files (.json) or directories of them.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub metric: Vec<String>,
    /// External scores merged as an extra metric.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Directory for severity_table.csv and severity_table.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub registry: Option<PathBuf>,
    #[arg(long)]
    pub schedule: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long)]
    pub backend: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.config.as_deref().map(FileConfig::load).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Calibrate(a) => commands::calibrate(a, &cfg),
        Command::Apply(a) => commands::apply(a, &cfg),
        Command::Generate(a) => commands::generate(a, &cfg),
        Command::Report(a) => commands::report(a, &cfg),
        Command::Validate(a) => commands::validate(a, &cfg),
        Command::List(a) => commands::list(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
