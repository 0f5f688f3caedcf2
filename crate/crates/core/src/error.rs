//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or payload dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration value violates its invariants.
    #[error("invalid config: {0}")]
    Config(String),

    /// A dataset-level problem: missing columns, empty tables, bad labels.
    #[error("data error: {0}")]
    Data(String),

    /// Text that could not be parsed into the expected type.
    #[error("parse error: {0}")]
    Parse(String),

    /// Violation of the coordinator/agent wire contract.
    #[error("protocol error [{code}]: {detail}")]
    Protocol { code: String, detail: String },

    /// Transport-level failure talking to or running the coordinator.
    #[error("http error: {0}")]
    Http(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-parseable class, used by the CLI's one-line error output.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Parse(_) => "parse",
            Error::Protocol { .. } => "protocol",
            Error::Http(_) => "http",
            Error::Io(_) => "io",
            Error::Json(_) => "serde",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
