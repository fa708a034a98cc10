//! Experiment runner: single extractions, f-scans, the verification suite and
//! integrator convergence studies.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("state has no current divergence; no pulse of this family can change its energy")]
    NoCurrentDivergence,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<gauge_dirac::Error> for CliError {
    fn from(e: gauge_dirac::Error) -> Self {
        match e {
            gauge_dirac::Error::NoCurrentDivergence => CliError::NoCurrentDivergence,
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::NoCurrentDivergence => 4,
            CliError::Io(_) => 1,
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Verification checks failed.
    Failed,
    /// Measurement disagrees with prediction, or a study left the asymptotic regime.
    Mismatch,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
            Status::Mismatch => 2,
        }
    }
}

pub fn exit_with(result: Result<Status, CliError>) -> ExitCode {
    match result {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
