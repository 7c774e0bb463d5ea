//! `oneclick`: thresholds, steering curves, Bell noise curves, white-noise
//! robustness sweeps and simulated experiments as CSV or JSON.
//!
//! Exit codes: 0 success, 1 computation failure, 2 invalid input.

mod commands;
mod grid;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use oneclick_core::bell::BellMode;
use oneclick_core::lhs::WnrMode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("computation failed: {0}")]
    Compute(String),
}

impl From<oneclick_core::Error> for CliError {
    fn from(e: oneclick_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Compute(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Compute(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BellModeArg {
    Optimized,
    Maxent,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WnrModeArg {
    Maxent,
    Optimized,
}

#[derive(Debug, Parser)]
#[command(name = "oneclick", version, about = "One-click steering and Bell analyses")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cutoff efficiency 1/λ_max for X equally spaced settings.
    Threshold {
        #[arg(long = "X")]
        settings: usize,
        /// Spacing δ between neighbouring settings.
        #[arg(long, conflicts_with = "limit", required_unless_present = "limit")]
        delta: Option<f64>,
        /// The δ → 0 limit, 1/X.
        #[arg(long)]
        limit: bool,
    },
    /// Optimal witness value against setting overlap.
    CurveSteering {
        /// Efficiencies, `start:stop:count` or a comma list.
        #[arg(long)]
        eps: String,
        /// State cos α|00⟩ + sin α|11⟩.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        alpha: f64,
        /// Overlaps cos²(δ/2).
        #[arg(long, default_value = "0.01:0.99:99")]
        overlaps: String,
    },
    /// Tolerable white noise for the Eberhard test against efficiency.
    CurveBell {
        #[arg(long, value_enum)]
        mode: BellModeArg,
        #[arg(long)]
        eps: String,
    },
    /// Steering white-noise robustness against efficiency.
    WnrSteering {
        #[arg(long, value_enum)]
        mode: WnrModeArg,
        #[arg(long)]
        eps: String,
    },
    /// Simulated counts through reconstruction and witness evaluation.
    Simulate {
        /// JSON pipeline configuration.
        #[arg(long)]
        config: PathBuf,
    },
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(
            File::create(p).map_err(|e| CliError::Validation(format!("cannot create {}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = sink(&cli.output)?;
    let fmt = cli.format;
    match cli.command {
        Command::Threshold { settings, delta, limit } => commands::threshold(settings, delta, limit, fmt, out),
        Command::CurveSteering { eps, alpha, overlaps } => {
            commands::curve_steering(&grid::parse_grid(&eps)?, alpha, &grid::parse_grid(&overlaps)?, fmt, out)
        }
        Command::CurveBell { mode, eps } => {
            let mode = match mode {
                BellModeArg::Optimized => BellMode::Optimized,
                BellModeArg::Maxent => BellMode::Maxent,
            };
            commands::curve_bell(mode, &grid::parse_grid(&eps)?, fmt, out)
        }
        Command::WnrSteering { mode, eps } => {
            let mode = match mode {
                WnrModeArg::Maxent => WnrMode::Maxent,
                WnrModeArg::Optimized => WnrMode::Optimized,
            };
            commands::wnr_steering(mode, &grid::parse_grid(&eps)?, fmt, out)
        }
        Command::Simulate { config } => commands::simulate(&config, fmt, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Compute("x".into()).exit_code(), 1);
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
    }
}
