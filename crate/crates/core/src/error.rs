use thiserror::Error;

/// Errors produced anywhere in the radio-map pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("sample {index} has no measured RSRP")]
    MissingMeasurement { index: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel expression: {0}")]
    KernelSyntax(String),

    #[error("cholesky factorization failed (n = {n}, last jitter = {jitter:e}); kernel matrix is too ill-conditioned")]
    Conditioning { n: usize, jitter: f64 },

    #[error("kriging system is singular")]
    SingularKriging,

    #[error("invalid selection request: {0}")]
    Selection(String),

    #[error("scenario generation: {0}")]
    Scenario(String),

    #[error("model artifact: {0}")]
    Artifact(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
