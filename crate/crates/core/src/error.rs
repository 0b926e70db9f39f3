use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input values violate a domain invariant (non-finite, empty).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Parameters are individually valid but do not fit the data.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Structurally valid file whose contents are inconsistent (ragged rows, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    #[error("weighted Jaccard similarity is undefined for two empty sets")]
    UndefinedSimilarity,

    #[error("index load failed: {0}")]
    IndexLoad(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
