//! Library side of the `ndicke` command: argument parsing, configuration,
//! the subcommands and their file writers.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;
pub mod units;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{ConfigError, Format, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PARTIAL: u8 = 3;
pub const EXIT_FAILED: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ndicke",
    version,
    about = "Mean-field n-phase Dicke model simulator"
)]
pub struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Comma-separated output formats (csv, json, svg).
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Normal-phase eigenfrequencies, growth rate and critical pump.
    Modes,
    /// Minima of the lossless Lyapunov potential.
    Lyapunov,
    /// Stationary states and their linear stability.
    Steady,
    /// Ensemble of full trajectories and their endpoint clusters.
    Traj,
    /// Phase-diagram sweep, line cuts and force contours.
    Phase,
    /// Effective phonon hopping matrix and its nonreciprocity.
    Heff,
    /// Print the resolved configuration and exit.
    Config,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Lyapunov => "lyapunov",
            Command::Steady => "steady",
            Command::Traj => "traj",
            Command::Phase => "phase",
            Command::Heff => "heff",
            Command::Config => "config",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] ndicke::Error),
    #[error("numerical failure: {0}")]
    AllFailed(String),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) | CliError::AllFailed(_) | CliError::Io(_) => EXIT_FAILED,
        }
    }
}

/// Whether every requested computation produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Full,
    Partial,
}

/// Applies command-line overrides to the loaded configuration.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(formats) = &cli.format {
        cfg.formats = formats.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes a line to stdout, ignoring a closed pipe.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("configuration error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let cfg = match resolve_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return EXIT_CONFIG;
        }
    };
    if cli.command == Command::Config {
        say(&cfg.to_json());
        return EXIT_OK;
    }
    match commands::execute(cli.command, &cfg) {
        Ok(report) => {
            for line in &report.lines {
                say(line);
            }
            for path in &report.files {
                say(&format!("wrote {}", path.display()));
            }
            match report.completion {
                Completion::Full => EXIT_OK,
                Completion::Partial => {
                    eprintln!("warning: some computations failed; results are partial");
                    EXIT_PARTIAL
                }
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
