use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("enumeration budget exceeded: {needed} points requested, limit is {limit}")]
    Budget { needed: f64, limit: f64 },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid range: a = {a}, b = {b} (need 0 < a < b)")]
    InvalidRange { a: f64, b: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("linear part vanishes (sigma2 = {sigma2:e}); expansion undefined")]
    DegenerateLinearPart { sigma2: f64 },

    #[error("norm precondition violated: vector {index} has norm {norm} < r = {r}")]
    NormPrecondition { index: usize, norm: f64, r: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
