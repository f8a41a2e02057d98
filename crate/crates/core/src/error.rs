use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    /// Input failed validation; `field` names the offending field.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("incomplete correlation data: missing setting string {missing}")]
    IncompleteData { missing: String },

    #[error("numerical health check failed: {0}")]
    NumericalHealth(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by malformed or out-of-contract input.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NumericalHealth(_) | Error::Construction(_))
    }
}
