use std::io;

use thiserror::Error;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum TvError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("numerical failure at iteration {iteration}: {what}")]
    NumericalFailure { iteration: usize, what: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("oracle failed to certify its result: {0}")]
    Oracle(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl TvError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TvError::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = TvError> = std::result::Result<T, E>;
