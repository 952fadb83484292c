//! Command implementations behind the `phasemix` binary.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::fmt;
use std::process::ExitCode;

/// Failures, each mapped to a fixed process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// One or more verify checks failed (exit 1).
    VerifyFailed(usize),
    /// Unreadable, malformed or inconsistent configuration, or unwritable output (exit 2).
    Config(String),
    /// Numerical failure during a computation (exit 3).
    Numeric(String),
    /// A transient run left the admissible state space (exit 4).
    Blowup(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Blowup(_) => 4,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::VerifyFailed(n) => write!(f, "{n} verification check(s) failed"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical error: {m}"),
            CliError::Blowup(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<phasemix::Error> for CliError {
    fn from(e: phasemix::Error) -> Self {
        match e {
            phasemix::Error::Blowup { .. } => CliError::Blowup(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}
