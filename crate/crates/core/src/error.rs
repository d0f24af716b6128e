use thiserror::Error;

/// Errors raised by the polarimetric core, the sampler and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DopError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("coherency matrix is not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),
    #[error("degenerate coherency matrix (zero trace)")]
    DegenerateMatrix,
    #[error("singular coherency matrix")]
    SingularMatrix,
    #[error("zero total intensity")]
    ZeroIntensity,
    #[error("dark region: estimated a1 + a4 is zero")]
    DarkRegion,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("record {0} has no cross term; four-image estimation needs one on every record")]
    MissingCross(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = DopError> = std::result::Result<T, E>;
