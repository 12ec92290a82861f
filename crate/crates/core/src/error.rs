use thiserror::Error;

/// Errors raised by the estimation library.
///
/// The variants map onto the CLI exit-code scheme: `Input` and `Domain`
/// are data problems, `Config` is a bad parameter choice.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IfaError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, IfaError>;
