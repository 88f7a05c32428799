use thiserror::Error;

/// Errors raised across the crate.
///
/// Every variant carries a human-readable message; `PropertyFailure` also
/// carries the offending witness serialized as CSV so callers can persist it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("unbounded model: {0}")]
    UnboundedModel(String),

    #[error("fixed-point iteration failed at node {node} (t = {t}): {reason}")]
    Stiffness { node: usize, t: f64, reason: String },

    #[error("model error at t = {t}: {reason}")]
    Model { t: f64, reason: String },

    #[error("property `{property}` violated: {detail}")]
    PropertyFailure {
        property: String,
        detail: String,
        witness_csv: Option<String>,
    },

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(err: std::io::Error) -> Self {
        LabError::Io(err.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(err: csv::Error) -> Self {
        LabError::Io(err.to_string())
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
