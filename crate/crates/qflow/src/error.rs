//! Crate-wide error type.
//!
//! Errors are grouped into coarse categories so binary frontends can map them
//! onto stable exit codes without matching on individual variants.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error category, primarily used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Invalid configuration, flags, or API contract violations.
    Config,
    /// Malformed, inconsistent, or unreadable input data.
    Data,
    /// A numerical procedure failed (divergence, non-finite values).
    Numerical,
}

/// All errors produced by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration or argument combination.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A caller violated an API contract (e.g. passed an unnormalized
    /// distribution where a normalized one is required).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A text input could not be parsed; points at the offending line.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    /// Input data is internally inconsistent.
    #[error("inconsistent data: {0}")]
    Data(String),

    /// A model file failed format, version, or checksum validation.
    #[error("model file: {0}")]
    ModelFile(String),

    /// A numerical procedure produced non-finite values or failed to make
    /// progress.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The coarse category this error belongs to.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::Contract(_) => ErrorCategory::Config,
            Error::Parse { .. } | Error::Data(_) | Error::ModelFile(_) | Error::Io(_) => {
                ErrorCategory::Data
            }
            Error::Numerical(_) => ErrorCategory::Numerical,
        }
    }
}
