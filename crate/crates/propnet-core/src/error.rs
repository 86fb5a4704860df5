//! Error type shared by every analysis stage.

use std::path::PathBuf;

use thiserror::Error;

/// Common result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed JSON: {message}")]
    ParseLine { line: usize, message: String },

    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },

    #[error("query parse error at offset {offset}: {message}")]
    QueryParse { offset: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("modularity undefined: graph has zero total edge weight")]
    UndefinedModularity,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        /// Last iterate, so callers can inspect or restart.
        last: Vec<f64>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code contract: 2 config error, 3 data error, 4 numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NonConvergence { .. } => 4,
            _ => 3,
        }
    }
}
