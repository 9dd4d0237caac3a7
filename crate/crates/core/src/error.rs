//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A state component left the numeric domain during integration
    /// (non-finite value or a negative excursion beyond the clamp band).
    #[error("numerical domain violation: component {component} = {value:e} at t = {time} d")]
    NumericalDomain {
        component: &'static str,
        value: f64,
        time: f64,
    },

    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("dataset with {rows} rows cannot be split at test fraction {fraction}")]
    EmptyPartition { rows: usize, fraction: f64 },

    #[error("price weights must be nonnegative and sum to 1 (sum = {0})")]
    WeightSum(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
