//! File-based front end for `peakguard-core`: JSON configuration, CSV/JSON
//! reports with embedded config hashes, SVG figures and parallel batch
//! studies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod commands;
pub mod config;
pub mod metadata;
pub mod output;
pub mod svg;

use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] peakguard_core::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Process exit status of a finished command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// `analyze` only: the system is not attack-robust.
    NotRobust,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::NotRobust => 1,
        }
    }
}

pub const ERROR_EXIT: u8 = 2;

pub fn exit_code(result: &Result<Outcome, CliError>) -> ExitCode {
    match result {
        Ok(o) => ExitCode::from(o.code()),
        Err(_) => ExitCode::from(ERROR_EXIT),
    }
}
