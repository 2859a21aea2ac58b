//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside the supported range 2..=24")]
    QubitCountOutOfRange(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate spectrum: all 2^n energies equal {0}; normalization undefined")]
    DegenerateSpectrum(f64),

    #[error("path is not a monotone function of theta at knot indices {indices:?}")]
    NonMonotonePath { indices: Vec<usize> },

    #[error("rescale factor must be positive, got {0}")]
    NonPositiveRescale(f64),

    #[error(
        "integrator step guard violated: max per-step phase {phase:.3} rad exceeds 0.5; \
         use at least {min_steps} steps"
    )]
    StepGuard { phase: f64, min_steps: usize },

    #[error("bimodal fit failed: {0}")]
    FitFailed(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
