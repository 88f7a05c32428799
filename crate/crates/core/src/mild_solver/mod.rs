//! Mild-solution integrator for `u'(t) = A u(t) + F(t, u_t)` and the
//! solution map `Q(t): phi -> u_t`.

mod convergence;
mod problem;
mod solve;
mod trajectory;

pub use convergence::{convergence_study, ConvergenceRow, ConvergenceTable};
pub use problem::{FdeProblem, Nonlinearity, SolverConfig, ZeroForcing};
pub use solve::{solution_map, solve};
pub use trajectory::Trajectory;
