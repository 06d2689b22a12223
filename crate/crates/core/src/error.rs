//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The metric failed a symmetric positive-definite factorization.
    #[error("metric is not positive definite at the queried configuration")]
    SingularMetric,

    /// Mismatched array dimensions between operands.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// The constraint matrix `A(q)` lost rank.
    #[error("constraint matrix is rank deficient at the queried configuration")]
    RankDeficientConstraints,

    /// A frame or block solve exceeded the condition-number guard.
    #[error("ill-conditioned frame: condition estimate {cond:.3e} exceeds 1e12")]
    IllConditionedFrame { cond: f64 },

    /// The friction operator did not block-diagonalize in the `[S|W]` frame.
    #[error("friction operator has off-block leakage {defect:.3e} in the distribution frame")]
    QMapConstruction { defect: f64 },

    /// Slip expansions are only provided up to second order.
    #[error("unsupported slip order {order} (supported: 0, 1, 2)")]
    UnsupportedOrder { order: usize },

    /// Step-size guard for the stiff full model.
    #[error(
        "step {dt:.3e} too large for stiffness: full model requires dt <= epsilon/20 = {max:.3e}"
    )]
    StepTooLargeForStiffness { dt: f64, max: f64 },

    /// The integrator produced a non-finite state.
    #[error("non-finite state encountered at t = {t:.6e}")]
    NonFiniteState { t: f64 },

    /// Invalid physical parameters.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Configuration file does not match the schema.
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
