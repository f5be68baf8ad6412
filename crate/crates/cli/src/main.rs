mod config;
mod error;
mod fit;
mod manifest;
mod reproduce;
mod sensitivity;
mod simulate;

use clap::{Parser, Subcommand, ValueEnum};
use config::Config;
use error::{CliError, CliResult};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "nvthermo", version, about = "NV- centre spin-resonance and Debye-Waller thermometry toolkit")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed; overrides `rng.seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or directory for `reproduce`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic spectrum or time series.
    Simulate(simulate::SimulateArgs),
    /// Fit a recipe to a spectrum or point table and write a JSON report.
    Fit(fit::FitArgs),
    /// Tabulate the shot-noise temperature floor.
    Sensitivity(sensitivity::SensitivityArgs),
    /// Regenerate a calibration or analysis figure as plot-ready data.
    Reproduce(reproduce::ReproduceArgs),
}

/// Settings shared by every subcommand.
pub struct Context {
    pub cfg: Config,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Context {
    pub fn manifest(&self) -> manifest::RunManifest {
        let mut m = manifest::RunManifest::new(&self.cfg, self.config_path.as_deref(), self.seed);
        if let Some(p) = &self.config_path {
            if let Ok(h) = manifest::hash_file(p) {
                m.inputs.push(h);
            }
        }
        if let Some(p) = &self.cfg.expansion.table_path {
            if let Ok(h) = manifest::hash_file(p) {
                m.inputs.push(h);
            }
        }
        m
    }

    pub fn require_out(&self) -> CliResult<PathBuf> {
        self.out.clone().ok_or_else(|| CliError::Usage("--out is required for this command".into()))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let ctx = Context {
        seed: cli.seed.unwrap_or(cfg.rng.seed),
        cfg,
        config_path: cli.config,
        out: cli.out,
        format: cli.format,
    };
    match cli.command {
        Command::Simulate(a) => simulate::run(&ctx, a),
        Command::Fit(a) => fit::run(&ctx, a),
        Command::Sensitivity(a) => sensitivity::run(&ctx, a),
        Command::Reproduce(a) => reproduce::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nvthermo: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
