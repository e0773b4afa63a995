use std::path::PathBuf;

use thiserror::Error;

/// Grid frequency given as signed DFT indices `(k1, k2)`.
pub type GridFrequency = (i64, i64);

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    #[error("frame lower bound {lower:e} below threshold {threshold:e}; {} uncovered frequencies (first: {:?})", uncovered.len(), uncovered.first())]
    FrameDeficiency {
        lower: f64,
        threshold: f64,
        uncovered: Vec<GridFrequency>,
    },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("missing filter key {0}")]
    MissingKey(String),

    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("target Gram matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("unreadable image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
