//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Error`]. The CLI maps
//! variants onto process exit codes: configuration and usage problems exit
//! with status 2, runtime failures (I/O, numerics, corrupt artifacts) exit
//! with status 1.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All error conditions surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value is outside the operation's domain
    /// (non-finite altitude, negative speed, unknown channel, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Speed at or below the guard threshold; the glide-path-angle rate
    /// divides by speed, so integration refuses to continue.
    #[error("singular speed: {speed} m/s is at or below the minimum {minimum} m/s")]
    SingularSpeed { speed: f64, minimum: f64 },

    /// Tensor or layer shape disagreement.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Window length incompatible with the architecture (must be >= 3).
    #[error("invalid window length: {0}")]
    InvalidWindow(String),

    /// Not enough samples, windows, or pairs to perform the operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Dropout rate outside [0, 1).
    #[error("invalid dropout rate: {0} (must satisfy 0 <= rate < 1)")]
    InvalidRate(f64),

    /// An operation was called in the wrong order (e.g. backward before
    /// forward).
    #[error("invalid state: {0}")]
    State(String),

    /// Configuration file or flag validation failure (usage error).
    #[error("config error: {0}")]
    Config(String),

    /// Model file declares an unsupported format version.
    #[error("unsupported model format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    /// Model file parsed but its contents are inconsistent
    /// (shape/value-count mismatch, non-finite values, axis mix-ups).
    #[error("corrupt model file: {0}")]
    Corrupt(String),

    /// Filesystem failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A document (JSON or CSV) failed to parse.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// Builds an [`Error::Io`] with path context.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Builds an [`Error::Parse`] with path context.
    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code the CLI should use for this error: 2 for
    /// usage/config errors, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}
