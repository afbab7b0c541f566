//! Experiment runner behind the `bsq` binary.
//!
//! Each subcommand reads a JSON config (or the shipped default), runs its
//! checks, and returns a [`Report`] of CSV/JSON files plus a pass flag. The
//! binary writes the files atomically under `--out` and maps the outcome to
//! an exit code.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use report::Report;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

/// Map a failure during computation (as opposed to while reading the config).
pub(crate) fn numeric<T>(what: &str, r: bsq_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Numeric(format!("{what}: {e}")))
}

#[derive(Debug, Parser)]
#[command(name = "bsq", version, about = "Bohr-Sommerfeld moduli-space experiment runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON config; the shipped default for the command is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "bsq-out")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Three-way comparison of moduli brackets against 2·F_{f,g}.
    BracketCheck,
    /// Restriction and horizontal/vertical compatibility residuals versus N.
    IdentityCheck,
    /// Classical and moduli-space trajectories.
    Flow,
    /// Action and Bohr-Sommerfeld defect over homothety families of loops.
    BsScan,
    /// Finite-dimensional geometric quantum mechanics checks.
    QmCheck,
    /// Error-versus-N tables for brackets and identities.
    Convergence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BracketCheck => "bracket-check",
            Command::IdentityCheck => "identity-check",
            Command::Flow => "flow",
            Command::BsScan => "bs-scan",
            Command::QmCheck => "qm-check",
            Command::Convergence => "convergence",
        }
    }

    pub fn default_config(self) -> &'static str {
        match self {
            Command::BracketCheck => include_str!("../configs/bracket-check.json"),
            Command::IdentityCheck => include_str!("../configs/identity-check.json"),
            Command::Flow => include_str!("../configs/flow.json"),
            Command::BsScan => include_str!("../configs/bs-scan.json"),
            Command::QmCheck => include_str!("../configs/qm-check.json"),
            Command::Convergence => include_str!("../configs/convergence.json"),
        }
    }
}

/// Overrides from the command line, applied on top of the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// Run one command on config text, without touching the filesystem.
pub fn run(command: Command, config: &str, overrides: Overrides) -> Result<Report, CliError> {
    match command {
        Command::BracketCheck => commands::bracket_check(parse(config)?, overrides),
        Command::IdentityCheck => commands::identity_check(parse(config)?, overrides),
        Command::Flow => commands::flow(parse(config)?, overrides),
        Command::BsScan => commands::bs_scan(parse(config)?, overrides),
        Command::QmCheck => commands::qm_check(parse(config)?, overrides),
        Command::Convergence => commands::convergence(parse(config)?, overrides),
    }
}

fn parse<T: serde::de::DeserializeOwned>(src: &str) -> Result<T, CliError> {
    serde_json::from_str(src).map_err(|e| CliError::Config(e.to_string()))
}

/// Thread cap from `BSQ_THREADS`; unset means rayon's default.
pub fn thread_cap(var: Option<&str>) -> Result<Option<usize>, CliError> {
    match var {
        None => Ok(None),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Usage(format!("BSQ_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}
