//! Planning, simulation, verification and estimation of self-consistency
//! error from the command line.
//!
//! This crate adds everything that needs `std` to `selfconsist-core`:
//! replay files and external label sources, JSON configs, reports and
//! manifests, and a rayon-backed replicate runner.

#![forbid(unsafe_code)]

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod parallel;
pub mod report;
pub mod sources;

use std::path::PathBuf;

pub use args::Cli;
pub use commands::run;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_FINDING: u8 = 2;
pub const EXIT_SOURCE: u8 = 3;

/// Environment variable consulted for a seed when neither the flag nor the
/// config file sets one.
pub const SEED_ENV: &str = "SELFCONSIST_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Core(#[from] selfconsist_core::Error),
    #[error("replay {path}: {source}")]
    Replay { path: PathBuf, source: sources::ReplayError },
    #[error(transparent)]
    External(#[from] sources::ExternalError),
    #[error("source failure: {0}")]
    Source(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Replay { .. } | Self::External(_) | Self::Source(_) => EXIT_SOURCE,
            _ => EXIT_USAGE,
        }
    }
}
