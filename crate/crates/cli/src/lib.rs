#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Command-line orchestration for the Rydberg-dressed Ising simulator.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rydberg_ising::spin_engine::BackendKind;

pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "rydberg-ising", version, about = "Rydberg-dressed Ising dynamics simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `cloud.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// meanfield, exact or collective.
    #[arg(long, global = true, value_name = "NAME")]
    pub backend: Option<String>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Dressed pair potential curves and interaction scales.
    Potential,
    /// Spin-echo twisting dataset and χ extraction.
    Twist,
    /// Floquet trajectories, orbit centres and flow lines.
    Floquet,
    /// Phase maps and zero-phase contours across the beam.
    Bifurcation,
    /// Built-in numerical checks.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Potential => "potential",
            Command::Twist => "twist",
            Command::Floquet => "floquet",
            Command::Bifurcation => "bifurcation",
            Command::Selftest => "selftest",
        }
    }
}

/// Loads the config and applies the command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.cloud.seed = seed;
    }
    if let Some(name) = &cli.backend {
        cfg.backend = name
            .parse::<BackendKind>()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one subcommand and writes its datasets; returns the paths written.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    use commands::*;
    let dir = cfg.output_dir.as_path();
    let name = command.name();
    match command {
        Command::Potential => {
            let r = potential::run(cfg)?;
            output::write_all(dir, name, cfg, &r, &potential::tables(&r))
        }
        Command::Twist => {
            let r = twist::run(cfg)?;
            output::write_all(dir, name, cfg, &r, &twist::tables(&r))
        }
        Command::Floquet => {
            let r = floquet::run(cfg)?;
            output::write_all(dir, name, cfg, &r, &floquet::tables(&r))
        }
        Command::Bifurcation => {
            let r = bifurcation::run(cfg)?;
            let mut t = bifurcation::tables(&r);
            t.push(bifurcation::cut_table(cfg, &r));
            output::write_all(dir, name, cfg, &r, &t)
        }
        Command::Selftest => {
            let r = selftest::run()?;
            for c in &r.checks {
                println!(
                    "{} {}: {:.3e} (tolerance {:.1e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
            }
            let written = output::write_all(dir, name, cfg, &r, &[])?;
            match r.failures() {
                0 => Ok(written),
                n => Err(CliError::SelfTest(n)),
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve_config(cli)?;
    execute(cli.command, &cfg)
}
