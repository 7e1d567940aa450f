use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in {stage}{}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    NonFinite { stage: &'static str, step: Option<u64> },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("fit failed: {0}")]
    Fit(String),

    /// A quantity whose definition breaks down on the given input (zero norm, constant series).
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("sweep interrupted before all cells completed")]
    Interrupted,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
