use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown label: {0}")]
    UnknownLabel(String),
    #[error("unknown material preset: {0}")]
    UnknownMaterial(String),
    #[error("unknown noise preset: {0}")]
    UnknownNoisePreset(String),
    #[error("dimension {dim} is not a power of {base}")]
    BadDimension { dim: usize, base: usize },
    #[error("coupling fit residual {residual:e} exceeds {limit:e}")]
    ResidualTooLarge { residual: f64, limit: f64 },
    #[error("size limit: {what} needs {requested}, limit is {limit}")]
    SizeLimit { what: &'static str, requested: usize, limit: usize },
    #[error("memory budget exceeded: {0}")]
    MemoryBudget(String),
    #[error("Krylov propagation did not converge: {0}")]
    NonConvergence(String),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("missing measurement basis {0}")]
    MissingBasis(String),
    #[error("readout-flip masks present but no calibration supplied")]
    MissingCalibration,
    #[error("missing t = 0 sample")]
    MissingInitialSample,
    #[error("spectrum has zero norm")]
    ZeroNorm,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
