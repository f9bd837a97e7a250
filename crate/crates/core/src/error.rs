use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// A sequence expression or experiment setting that cannot be used.
    #[error("configuration error: {0}")]
    Config(String),

    /// The request is well formed but the mathematical preconditions fail.
    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("digit {0} exceeds the supported range")]
    DigitOverflow(String),

    #[error("n = {requested} exceeds the reliability horizon {horizon}")]
    BeyondHorizon { requested: usize, horizon: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
