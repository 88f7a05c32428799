//! Mild solutions of delayed abstract evolution equations
//! `u'(t) = A u(t) + F(t, u_t)` and numerical verification of the
//! contraction estimates behind their exponential renorm.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision types used by the command line tool.

// `!(x > 0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contraction_lab;
pub mod error;
pub mod mild_solver;
pub mod periodic_rd;
pub mod scalar;
pub mod semigroups;
pub mod state_space;

pub use error::{LabError, Result};
pub use scalar::Scalar;

pub type Field64 = state_space::SpatialField<f64>;
pub type Field32 = state_space::SpatialField<f32>;
pub type Grid64 = state_space::SpatialGrid<f64>;
pub type Segment64 = state_space::HistorySegment<f64>;
pub type Segment32 = state_space::HistorySegment<f32>;
pub type Weights64 = state_space::RenormWeights<f64>;
pub type Spectral64 = semigroups::SpectralNeumannSemigroup<f64>;
pub type Matrix64 = semigroups::MatrixSemigroup<f64>;
pub type Damped64 = semigroups::DampedSemigroup<f64>;
pub type Problem64 = mild_solver::FdeProblem<f64>;
pub type Config64 = mild_solver::SolverConfig<f64>;
pub type Trajectory64 = mild_solver::Trajectory<f64>;
pub type RdModel64 = periodic_rd::RdModel<f64>;




