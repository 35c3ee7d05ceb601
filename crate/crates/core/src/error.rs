use thiserror::Error;

use crate::oracle::LpStatus;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TotError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    /// A barrier was evaluated outside the open positive orthant.
    #[error("domain error: entry {index} = {value:e} is not strictly positive")]
    Domain { index: usize, value: f64 },

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// The path-following step left the region where one Newton step restores proximity.
    #[error("step-size violation at iteration {iteration}: decrement {decrement} exceeds {limit}")]
    StepViolation {
        iteration: usize,
        decrement: f64,
        limit: f64,
    },

    #[error("linear program is {0:?}")]
    Lp(LpStatus),
}

pub type Result<T> = std::result::Result<T, TotError>;
