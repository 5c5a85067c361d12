use thiserror::Error;

/// Failures raised by the numerical kernels.
///
/// Hypothesis violations of the inequalities are not errors; they are
/// reported through [`crate::bounds2d::BoundReport::hypotheses_ok`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("discretization failure: {0}")]
    Discretization(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("tail budget exhausted: remainder bound {tail:e} exceeds {limit:e}")]
    TailBudget { tail: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
