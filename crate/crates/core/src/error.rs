use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A storage or decoding invariant was violated. Always a bug.
    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("no graph without isolated nodes after {attempts} attempts (n={n}, L={side}, r={radius})")]
    GraphRejection {
        n: usize,
        side: f64,
        radius: f64,
        attempts: usize,
    },

    #[error("dissemination did not terminate within {limit} rounds")]
    NonTermination { limit: u64 },

    #[error("scaling sweep needs at least {needed} distinct values of n, got {got}")]
    InsufficientSweep { needed: usize, got: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
