use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, malformed, or violates an invariant.
    /// `key` names the offending key (or keys, joined by `/`).
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// Caller broke a shape or length contract.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("normal equations are singular or ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("run {index} failed: {source}")]
    Run {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
