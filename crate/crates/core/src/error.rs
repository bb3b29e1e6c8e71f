use std::io;

use thiserror::Error;

pub type Result<T, E = SrmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SrmError {
    #[error("degenerate plane: generators have |a.b| = {dot:.9}")]
    DegeneratePlane { dot: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),
    #[error("direction not covered by any basis vector (max dot {max_dot:.3e})")]
    UncoveredDirection { max_dot: f64 },
    #[error("dataset is empty after excluding zero-norm rows")]
    EmptyDataset,
    #[error("invalid epsilon {0}")]
    InvalidEpsilon(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("zero variance in correlation input")]
    ZeroVariance,
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    DivergenceDetected { epoch: usize, loss: f64 },
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numeric,
}

impl SrmError {
    pub fn kind(&self) -> ErrorKind {
        use SrmError::*;
        match self {
            NumericalFailure(_) | DivergenceDetected { .. } | ZeroVariance => ErrorKind::Numeric,
            Io(_) | Csv(_) | Json(_) | BadMagic { .. } | TruncatedFile(_) | CountMismatch { .. } => {
                ErrorKind::Io
            }
            DegeneratePlane { .. }
            | DegenerateBasis(_)
            | UncoveredDirection { .. }
            | EmptyDataset
            | InvalidEpsilon(_)
            | DimensionMismatch { .. }
            | DomainError(_)
            | InvalidInput(_) => ErrorKind::Validation,
        }
    }
}
