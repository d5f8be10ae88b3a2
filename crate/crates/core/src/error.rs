use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user configuration. `key` names the offending setting.
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    /// A function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller violated a documented precondition (dimension mismatch etc.).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The linear system could not be factorized.
    #[error("singular matrix: no usable pivot in row {row}")]
    Singular { row: usize },

    /// A numerical procedure failed for reasons other than singularity.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Newton's method did not meet either stopping criterion.
    #[error("Newton iteration did not converge after {iterations} iterations (last increment {last_increment:.3e})")]
    NewtonDivergence {
        iterations: usize,
        last_increment: f64,
        /// Increment norm of every iteration.
        history: Vec<f64>,
        /// Last iterate, flat unknown vector.
        iterate: Vec<f64>,
    },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A golden fixture no longer matches.
    #[error("fixture `{name}` mismatch: {message}")]
    Fixture { name: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
