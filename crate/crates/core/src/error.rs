use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("encoder at {endpoint} failed: {message}")]
    Transport { endpoint: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid model file: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("unknown document id `{0}`")]
    UnknownDocId(String),

    #[error("cosine similarity undefined for a zero-norm vector")]
    ZeroNorm,

    #[error("empty batch")]
    EmptyBatch,

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    /// Whether the failure stems from bad input rather than the environment
    /// (files, network). The CLI maps this to its exit code.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::Config(_)
                | Error::Validation(_)
                | Error::DuplicateId(_)
                | Error::UnknownDocId(_)
                | Error::ZeroNorm
                | Error::EmptyBatch
        )
    }
}
