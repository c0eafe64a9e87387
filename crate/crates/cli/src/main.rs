//! `quadmimo`: geometry, pattern, simulation, moment and experiment runs
//! driven by one JSON scenario file.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "quadmimo", version, about = "Quadrant MIMO weather radar toolkit")]
struct Cli {
    /// JSON scenario file; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a field by dotted path, e.g. `scheme.pri_s=1e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Physical and virtual element positions.
    Geometry,
    /// One- and two-way azimuth patterns with beamwidth and sidelobe level.
    Pattern,
    /// Simulated IQ time series.
    Simulate,
    /// Spectral moments from simulated or imported IQ.
    Moments,
    /// Reflectivity profile seen through designed beams.
    Reconstruct,
    /// Mean-power variance against the number of samples.
    Variance,
    /// Sector scan time.
    Scantime,
    /// Check the configuration without computing anything.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Geometry => "geometry",
            Command::Pattern => "pattern",
            Command::Simulate => "simulate",
            Command::Moments => "moments",
            Command::Reconstruct => "reconstruct",
            Command::Variance => "variance",
            Command::Scantime => "scantime",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("[{}] {source}", module_of(.source))]
    Domain {
        #[from]
        source: quadmimo::Error,
    },
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Domain { .. } | CliError::Output(_) => 2,
        }
    }
}

fn module_of(e: &quadmimo::Error) -> &'static str {
    use quadmimo::Error::*;
    match e {
        Geometry(_) => "array-geometry",
        Pattern(_) => "beampattern",
        Steering(_) => "mimo-model",
        Simulation(_) => "echo-sim",
        Moments(_) => "moments",
        Experiment(_) => "experiments",
        Format(_) | Io(_) | Csv(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let loaded = match config::load(cli.config.as_deref(), &cli.set, cli.seed, cli.out.as_deref()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("quadmimo: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    match commands::run(cli.command, &loaded) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("quadmimo {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
