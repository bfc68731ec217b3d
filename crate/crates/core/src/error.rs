use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent input data (bad ids, empty corpus, rule violations).
    #[error("data error: {0}")]
    Data(String),

    /// Tensor or parameter shapes do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// Bad configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Numerical failure (NaN/Inf where finiteness is required).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
