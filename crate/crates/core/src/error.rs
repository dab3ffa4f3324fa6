use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for database of {n} records")]
    Range { index: usize, n: usize },

    #[error("{what}: requested {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("privacy budget exhausted: requested {requested}, remaining {remaining}")]
    Budget { requested: f64, remaining: f64 },

    #[error("estimator undefined: {0}")]
    Undefined(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("LP solver stopped after {iterations} iterations (residual violation {violation:.3e}): {message}")]
    Solver {
        iterations: usize,
        violation: f64,
        message: String,
    },

    #[error("inconsistent input: {0}")]
    Consistency(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid scenario id {0} (expected 1, 2 or 3)")]
    InvalidScenario(u8),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
