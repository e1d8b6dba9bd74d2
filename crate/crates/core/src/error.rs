//! Error type shared by all modules.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by configuration, parsing, validation, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent; `field` names
    /// the offending entry.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    /// A contact-plan or scenario file could not be read syntactically.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// Structurally valid input with an unknown or ill-typed field.
    #[error("schema error: {0}")]
    Schema(String),

    /// Input data violates a model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A function argument violates its contract.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An index is outside the valid range.
    #[error("out of range: {0}")]
    Range(String),

    /// The service connectivity ratio is undefined for an empty pair set.
    #[error("connectivity ratio undefined: no active service pairs")]
    UndefinedRatio,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
