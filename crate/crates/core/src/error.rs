use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("envelope construction failed: {0}")]
    Envelope(String),
    #[error("envelope does not dominate the target: ratio {ratio} at theta = {theta}")]
    EnvelopeViolation { theta: f64, ratio: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("column not found: {0}")]
    ColumnNotFound(String),
    #[error("no valid rows in {0}")]
    NoValidRows(String),
    #[error("http status {status}: {excerpt}")]
    Http { status: u16, excerpt: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("{0}")]
    Offline(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
