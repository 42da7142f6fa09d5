use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("ill-conditioned splitting: {0}")]
    IllConditioned(String),
    #[error("map is not R-regular: {0}")]
    NotRegular(String),
    #[error("degenerate pair: {0}")]
    DegeneratePair(String),
    #[error("numerical instability: {0}")]
    NumericalInstability(String),
    #[error("sampling budget exhausted: {0}")]
    Sampling(String),
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("property violated: {0}")]
    PropertyViolation(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
