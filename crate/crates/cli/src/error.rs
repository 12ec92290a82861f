use std::path::Path;

use svd_ifa::IfaError;
use thiserror::Error;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// A failure with the process exit code it maps to.
#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::input(format!("{}: {err}", path.display()))
    }
}

impl From<IfaError> for CliError {
    fn from(err: IfaError) -> Self {
        let code = match err {
            IfaError::Input(_) | IfaError::Domain(_) => EXIT_INPUT,
            IfaError::Config(_) => EXIT_CONFIG,
            IfaError::Numerical(_) => EXIT_NUMERICAL,
        };
        Self { code, message: err.to_string() }
    }
}

/// Converts a library error, prefixing the flag it concerns.
pub fn flagged(flag: &'static str) -> impl Fn(IfaError) -> CliError {
    move |err| {
        let mut out = CliError::from(err);
        out.message = format!("{flag}: {}", out.message);
        out
    }
}
