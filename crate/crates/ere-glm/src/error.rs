//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in model fitting, screening, entropy
/// estimation, and inference.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("family domain violation: {0}")]
    Domain(String),

    #[error("family {0} has no canonical cumulant triple")]
    NonCanonicalFamily(&'static str),

    #[error("design columns {0:?} are rank deficient at tolerance")]
    RankDeficient(Vec<usize>),

    #[error("{stage} failed to converge after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
