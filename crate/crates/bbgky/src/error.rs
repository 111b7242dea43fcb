use std::fmt;

use thiserror::Error;

/// A DSL error with its 1-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Core(#[from] bbgky_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("malformed numeric input: {0}")]
    Structural(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl AppError {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        AppError::Structural(msg.into())
    }

    /// 0 success, 1 domain or validation failure, 2 usage or I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io(_) | AppError::Usage(_) => 2,
            AppError::Core(bbgky_core::Error::Usage(_)) => 2,
            _ => 1,
        }
    }
}
