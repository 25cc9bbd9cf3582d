//! Experiment runner for adaptive parallel tempering.
//!
//! A JSON config selects the target, the ladder adapter and the reward;
//! each command writes CSV traces and JSON summaries under the configured
//! output directory.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("trial {trial}: {source}")]
    Run {
        trial: usize,
        #[source]
        source: adaptive_pt::Error,
    },
}
