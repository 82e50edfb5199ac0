use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A mean/variance threshold was requested over an empty population.
    #[error("threshold undefined: empty population")]
    EmptyPopulation,

    /// The user wrote only null-text posts, so the text matrix has no columns.
    #[error("user {0} has no content tokens")]
    NoContent(String),

    #[error("singular value decomposition did not converge")]
    SvdNonConvergence,

    #[error("integrity error: {0}")]
    Integrity(String),

    /// CNR/DR need at least one non-member node in the examined core.
    #[error("common neighbor ratio undefined: core has no non-member nodes")]
    EmptyNeighborhood,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
