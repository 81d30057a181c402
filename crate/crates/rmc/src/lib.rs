//! Command-line driver for rmc-core: job configuration, parallel executors, level caches,
//! JSON reports and the invariant suites.

pub mod cache;
pub mod commands;
pub mod config;
pub mod exec;
pub mod report;
pub mod suites;

use std::path::PathBuf;

pub const SCHEMA: &str = "rmc-result/1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] rmc_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cache {path}: {reason}")]
    Cache { path: PathBuf, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
