use thiserror::Error;

/// Errors raised by the planning library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad dimensions, parameters out of range, schema errors.
    #[error("validation error: {0}")]
    Validation(String),

    /// Evaluation at a point where the chart is not defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quantity that is undefined at the given input (e.g. distance gradient at the base point).
    #[error("singularity: {0}")]
    Singularity(String),

    /// The integrated state became non-finite.
    #[error("integration diverged at t = {time}")]
    Divergence { time: f64 },

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Parameter search exhausted its grid without certifying avoidance.
    #[error("no certified parameters found (final threshold {threshold}): {reason}")]
    Infeasible { threshold: f64, reason: String },

    /// The shooting solver did not reach its residual tolerance.
    #[error("shooting did not converge (residual {residual:e} after {evaluations} evaluations)")]
    NotConverged { residual: f64, evaluations: usize },

    /// A hybrid interpolation segment could not be planned.
    #[error("segment {segment} failed: {reason}")]
    SegmentFailure { segment: usize, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
