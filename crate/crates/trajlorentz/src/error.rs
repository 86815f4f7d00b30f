//! Error type shared across the crate.
//!
//! Variants are grouped by how a batch run should react to them: bad
//! configuration values, bad input data, i/o failures, and numeric
//! divergence during training. [`Error::exit_code`] maps each group to
//! the process exit code used by the command-line tool.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter value is outside its documented domain (non-positive
    /// cell size, unknown mode name, mismatched curvatures, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data violates a contract: empty dataset, duplicate ids,
    /// non-finite coordinates, malformed binary headers, and the like.
    #[error("invalid data: {0}")]
    Data(String),

    /// An underlying read or write failed. The path is kept so batch
    /// logs name the offending file.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A text input could not be parsed. Line numbers are 1-based and
    /// count physical lines, including the header.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    /// The training loss left the representable range. Lowering the
    /// learning rate is the usual fix, so it is echoed here.
    #[error("training diverged at epoch {epoch} (loss {loss}, learning rate {learning_rate})")]
    Divergence {
        epoch: usize,
        loss: f64,
        learning_rate: f64,
    },
}

impl Error {
    /// Process exit code for the command-line tool: 1 for configuration
    /// (usage) problems, 2 for data and i/o problems, 3 for divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Io { .. } | Error::Parse { .. } => 2,
            Error::Divergence { .. } => 3,
        }
    }

    /// Shorthand used by readers and writers all over the crate.
    pub fn io(path: &str, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }
}
