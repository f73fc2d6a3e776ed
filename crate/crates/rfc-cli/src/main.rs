//! `rfc`: synthesize, analyze and simulate observer-based robust force
//! controllers from a JSON configuration.
//!
//! Exit codes: 0 success, 2 right-half-plane zero (check), 3 unstable or
//! diverged, 64 usage/config error, 74 I/O error.

mod commands;
mod config;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "rfc",
    about = "Robust force controller synthesis, analysis and simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural checks: integrator, relative degree, RHP zeros, stability.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report.txt.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the extracted loop and exogenous transfer functions.
    Tf {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Root locus over the force-gain grid (CSV + SVG).
    Rlocus {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Closed-loop step response (CSV + SVG + metrics).
    Step {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Noise seed override (precedence: flag > RFC_SEED > config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// One-parameter study over a grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Config field to sweep, e.g. servo.J_mi or controller.C_f.
        #[arg(long)]
        param: String,
        /// Grid as a:b:n (inclusive linear) or a comma-separated list.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Seed precedence: command-line flag, then RFC_SEED, then the config file.
fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("RFC_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("RFC_SEED must be an unsigned integer, got '{v}'")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };

    let outcome = match &cli.command {
        Command::Check { config, out } => commands::cmd_check(config, out),
        Command::Tf { config, out } => commands::cmd_tf(config, out),
        Command::Rlocus { config, out } => commands::cmd_rlocus(config, out),
        Command::Step { config, out, seed } => match resolve_seed(*seed) {
            Ok(seed) => commands::cmd_step(config, out, seed),
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(64);
            }
        },
        Command::Sweep {
            config,
            out,
            param,
            grid,
            seed,
        } => match resolve_seed(*seed) {
            Ok(seed) => commands::cmd_sweep(config, out, param, grid, seed),
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(64);
            }
        },
    };

    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
