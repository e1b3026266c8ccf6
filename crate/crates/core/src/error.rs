use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("matrix is numerically singular")]
    Singular,
    #[error("derivative stencil leaves the chart domain at {point:?}")]
    StencilOutOfDomain { point: Vec<f64> },
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },
    #[error("twistor function vanishes (norm {norm:e})")]
    ZeroTwistor { norm: f64 },
    #[error("frame completion is degenerate")]
    FrameDegenerate,
    #[error("Newton refinement did not converge from seed {seed}")]
    ConvergenceFailure { seed: u64 },
    #[error("invariant {what} violated: residual {residual:e}")]
    InvariantViolation { what: &'static str, residual: f64 },
    #[error("point left the chart")]
    ChartEscape,
    #[error("weights are invalid: {reason}")]
    InvalidWeights { reason: &'static str },
    #[error("dimension {dim} is invalid: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },
}

pub type Result<T> = std::result::Result<T, GeomError>;
