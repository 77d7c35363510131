use alloc::string::String;

use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain where the computation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The enumerated state space would exceed the configured budget.
    #[error("state budget exceeded: {cap} yields {states} states (budget {budget})")]
    Budget { cap: String, states: usize, budget: usize },

    /// An iterative solver hit its sweep cap before reaching tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// A regression could not be computed.
    #[error("fit failed: {0}")]
    Fit(String),

    /// The requested action is not legal in the current state.
    #[error("illegal action: {0}")]
    IllegalAction(String),

    /// A reward function was applied under the wrong objective.
    #[error("reward mode mismatch: expected {expected}")]
    ModeMismatch { expected: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
