use thiserror::Error;

/// Errors raised anywhere in the testbed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no orthogonal direction available: {constraints} constraints in dimension {dim}")]
    NoOrthogonalDirection { constraints: usize, dim: usize },

    #[error("query budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },

    #[error("oracle failed at query {index}: {source}")]
    Oracle {
        index: usize,
        query: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("algorithm violated its declared class at query {index}")]
    ClassViolation { index: usize },

    #[error("iterate {index} is at distance {distance:e} from the minimizer, below the bound {bound:e}")]
    LowerBoundViolated {
        index: usize,
        distance: f64,
        bound: f64,
    },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("sample outside the ball: distance {distance:e} exceeds radius {radius:e}")]
    OutsideBall { distance: f64, radius: f64 },

    #[error("min-norm solver did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
