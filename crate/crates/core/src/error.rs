use thiserror::Error;

/// Errors shared across the evaluation engine.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("input outside environment domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid class probabilities: {0}")]
    InvalidProbs(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("training failed for agent `{agent}`: {message}")]
    Training { agent: String, message: String },

    #[error("estimation failed on environment draw {env_index} for agent `{agent}`: {message}")]
    Estimation {
        env_index: usize,
        agent: String,
        message: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
