use thiserror::Error;

use crate::expectations::FormViolation;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or table size makes the requested computation impossible.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid linear form system: {0}")]
    Forms(#[from] FormViolation),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
