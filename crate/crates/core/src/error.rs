use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid layer sizes {0:?}: need input width 2, output width 1 and no zero-width layer")]
    InvalidLayerSizes(Vec<usize>),

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("target density is {value} at mapped point ({}, {}) for source point ({}, {})", mapped[0], mapped[1], point[0], point[1])]
    DomainViolation {
        value: f64,
        point: [f64; 2],
        mapped: [f64; 2],
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("poisson disk sampling failed after {retries} retries (best yield {best} of {target})")]
    SamplingFailed {
        retries: usize,
        best: usize,
        target: usize,
    },

    #[error("line search precondition violated: directional derivative {0} is not negative")]
    NotDescent(f64),

    #[error("line search found no acceptable step within {evals} evaluations")]
    LinesearchFailed { evals: usize },

    #[error("zero denominator in normalized error")]
    ZeroDenominator,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
