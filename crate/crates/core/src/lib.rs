//! Interior point solver for discrete multi-marginal (tensor) optimal transport.
//!
//! The solver follows the central path of the logarithmic barrier restricted to the
//! affine slice cut out by the marginal constraints. A dense simplex oracle and the
//! barrier calculus helpers make every step checkable at small sizes.

pub mod barrier;
pub mod error;
pub mod ipm;
pub mod oracle;
pub mod polytope;
pub mod tensor;

pub use error::{Result, TotError};
pub use ipm::{
    center, classify_weak_uniform, newton_direction, predicted_iterations, short_step_solve,
    Factor, KktStrategy, NewtonStep, NewtonSystem, PathState, SolveReport, SolverConfig, TraceRow,
};
pub use oracle::{solve_exact, DualCertificate, LpStatus, StandardFormLP};
pub use polytope::{start_point, MarginalProblem, Variant};
pub use tensor::{DenseTensor, Shape};
