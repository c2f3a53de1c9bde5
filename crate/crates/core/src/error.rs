//! Shared error type for the whole crate.

/// Errors produced by dataset ingestion, model fitting, and experiment runs.
///
/// The variants map onto the CLI exit codes: [`Error::Config`] → 2,
/// [`Error::Schema`] / [`Error::Parse`] / [`Error::Validation`] → 3,
/// [`Error::Numerical`] → 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Run or experiment configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// A column-role mapping does not match the file.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell could not be parsed; row is 1-based data row, column is a header name.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Data violates an invariant (site counts, class counts, widths, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical procedure failed (non-convergence, singular system, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Attach fold context to an error bubbling out of a per-fold computation.
    pub fn with_fold(self, repeat: usize, fold: usize) -> Error {
        match self {
            Error::Validation(m) => {
                Error::Validation(format!("repeat {repeat} fold {fold}: {m}"))
            }
            Error::Numerical(m) => Error::Numerical(format!("repeat {repeat} fold {fold}: {m}")),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
