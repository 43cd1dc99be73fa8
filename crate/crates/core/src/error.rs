use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = JipError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum JipError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Fewer usable eigenpairs exist than were requested.
    #[error("reduced rank: requested {requested} eigenpairs, only {achievable} finite eigenvalues available")]
    ReducedRank { requested: usize, achievable: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl JipError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        JipError::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        JipError::Io {
            path: path.into(),
            source,
        }
    }
}
