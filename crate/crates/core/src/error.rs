use thiserror::Error;

/// Errors shared by the samplers, solvers and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A moment of the given order is infinite for the requested intensity.
    #[error("moment of order {order} is infinite at lambda = {lambda}")]
    InfiniteMoment { order: usize, lambda: f64 },

    /// A fixed-point iteration hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A topology file could not be read or parsed.
    #[error("topology error: {0}")]
    Topology(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
