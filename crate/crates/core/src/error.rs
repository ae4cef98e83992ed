use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("conflicting integral record at line {line}: {message}")]
    Conflict { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error(
        "dimension {dim} exceeds the dense limit {limit}; use the SC or EN corrections instead"
    )]
    Capacity { dim: usize, limit: usize },

    #[error("target symmetry sector is empty")]
    EmptySector,

    #[error("partitioning integrity violated: first-order energy {0:e}")]
    PartitionIntegrity(f64),

    #[error("intruder state in sector {irrep} (state {state}): denominator {denominator:e}")]
    Intruder {
        irrep: String,
        state: usize,
        denominator: f64,
    },

    #[error("pauli term {0} does not commute with a symmetry generator")]
    SymmetryViolation(String),

    #[error("invalid tapering plan: {0}")]
    Plan(String),

    #[error("point {tag}: {source}")]
    Point {
        tag: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
