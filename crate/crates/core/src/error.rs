use thiserror::Error;

/// Errors raised by constructors and checks in this crate.
///
/// Verification *failures* are never errors: they come back as reports with a
/// failing verdict. Errors mean the inputs were malformed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("representation grid size {rep} does not match model size {model}")]
    GridMismatch { rep: usize, model: usize },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("empty index sequence")]
    EmptySequence,

    #[error("need moment of order {needed}, only {available} supplied")]
    InsufficientMoments { needed: usize, available: usize },

    #[error("matrix is not self-adjoint (residual {residual:e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("state is not normalized: phi(1) = {value}")]
    NotNormalized { value: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
