//! `pqeva` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 optimizer stopped at maxiter, 1 I/O failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::Config;
use crate::output::{sha256_hex, Format, ManifestInputs, Output};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] pqeva::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Core(pqeva::Error::Io(_)) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "pqeva", version, about = "Robust partial eigenvalue assignment for second-order systems")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Open-loop spectrum with residuals.
    Eig,
    /// Assign the selected eigenvalues at the configured Γ and check spillover.
    Assign,
    /// Minimise the robustness cost and report metrics.
    Optimize,
    /// Sensitivities of the eigenvalue sum and product.
    Sensitivity,
    /// Eigenvalue drift under random coefficient perturbations.
    Perturb,
    /// Forced response, open and closed loop.
    Simulate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Eig => "eig",
            Command::Assign => "assign",
            Command::Optimize => "optimize",
            Command::Sensitivity => "sensitivity",
            Command::Perturb => "perturb",
            Command::Simulate => "simulate",
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = Config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.reseed(seed);
    }
    let inputs = ManifestInputs {
        config_path: path.display().to_string(),
        config_sha256: sha256_hex(cfg.text.as_bytes()),
        problem: cfg.problem_name.clone(),
        command: cli.command.name().to_string(),
        seed: cli.seed,
        format: format!("{:?}", cli.format).to_lowercase(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut out = Output::new(&cli.out, cli.format, inputs)?;
    let outcome = match cli.command {
        Command::Eig => commands::eig(&cfg, &mut out),
        Command::Assign => commands::assign(&cfg, &mut out),
        Command::Optimize => commands::optimize_cmd(&cfg, &mut out),
        Command::Sensitivity => commands::sensitivity(&cfg, &mut out),
        Command::Perturb => commands::perturb(&cfg, &mut out),
        Command::Simulate => commands::simulate_cmd(&cfg, &mut out),
    };
    let hash = out.finish()?;
    let outcome = outcome?;
    println!("manifest {hash} -> {}", cli.out.join("manifest.json").display());
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Ok(Outcome::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
