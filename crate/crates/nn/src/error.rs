//! Error type shared by all neural-network modules.

use thiserror::Error;

/// Errors raised by the network kernels, the training pipeline, dataset
/// generation and checkpoint I/O.
#[derive(Debug, Error)]
pub enum NnError {
    /// Invalid configuration or mismatched shapes detected before any
    /// computation ran.
    #[error("configuration error: {0}")]
    Config(String),

    /// Training diverged or produced non-finite values.
    #[error("training failure: {0}")]
    Training(String),

    /// A dataset or checkpoint file is malformed.
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },

    /// Underlying I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl NnError {
    pub fn config(msg: impl Into<String>) -> Self {
        NnError::Config(msg.into())
    }

    pub fn format(path: impl AsRef<std::path::Path>, reason: impl Into<String>) -> Self {
        NnError::Format {
            path: path.as_ref().display().to_string(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        NnError::Io { path: path.as_ref().display().to_string(), source }
    }
}
