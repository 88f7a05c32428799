use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::mild_solver::{FdeProblem, Nonlinearity};
use crate::scalar::Scalar;
use crate::semigroups::{Semigroup, SpectralNeumannSemigroup};
use crate::state_space::{HistorySegment, SegmentView, SpatialField};

/// Delayed reaction-diffusion system on `[0, length]` with Neumann boundary,
/// diagonal diffusion and the forced delayed-logistic reaction
/// `f(t, phi)(x) = phi(0)(x) (a(t) - b phi(-tau)(x))`,
/// `a(t) = a0 (1 + forcing sin(2 pi t / omega))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdModel<T> {
    pub diffusivities: Vec<T>,
    pub length: T,
    pub tau: T,
    pub omega: T,
    pub a0: T,
    pub b: T,
    pub forcing: T,
    pub modes: usize,
}

impl<T: Scalar> RdModel<T> {
    /// Scalar delayed logistic with one diffusing component.
    #[allow(clippy::too_many_arguments)]
    pub fn logistic(d: T, length: T, tau: T, omega: T, a0: T, b: T, forcing: T, modes: usize) -> Self {
        Self { diffusivities: vec![d], length, tau, omega, a0, b, forcing, modes }
    }

    pub fn components(&self) -> usize {
        self.diffusivities.len()
    }

    /// The positive equilibrium `a0 / b` of the unforced model.
    pub fn equilibrium(&self) -> T {
        self.a0 / self.b
    }

    fn check_shape(&self) -> Result<()> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if self.diffusivities.is_empty() || !self.diffusivities.iter().all(|d| positive(*d)) {
            return Err(LabError::Domain("diffusivities must be positive".into()));
        }
        for (name, v) in [("length", self.length), ("tau", self.tau), ("omega", self.omega), ("a0", self.a0)] {
            if !positive(v) {
                return Err(LabError::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.forcing >= T::zero() && self.forcing.is_finite()) {
            return Err(LabError::Domain(format!("forcing amplitude must be >= 0, got {}", self.forcing)));
        }
        if !self.b.is_finite() {
            return Err(LabError::Domain("b must be finite".into()));
        }
        if self.modes == 0 {
            return Err(LabError::Domain("need at least one mode".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        if !(self.b > T::zero()) {
            return Err(LabError::UnboundedModel(format!(
                "b = {} gives no confinement; solutions can blow up",
                self.b
            )));
        }
        Ok(())
    }

    pub fn semigroup(&self) -> Result<SpectralNeumannSemigroup<T>> {
        SpectralNeumannSemigroup::new(self.diffusivities.clone(), self.length, self.modes, None)
    }

    /// Constant segment with value `c` in every component, on `intervals` theta steps.
    pub fn constant_segment(&self, c: T, intervals: usize) -> Result<HistorySegment<T>> {
        let grid = self.semigroup()?.grid().clone();
        HistorySegment::constant(self.tau, intervals, &SpatialField::constant(grid, self.components(), c))
    }
}

/// The pointwise forced delayed-logistic reaction.
#[derive(Debug, Clone, Copy)]
pub struct DelayedLogistic<T> {
    pub a0: T,
    pub b: T,
    pub forcing: T,
    pub omega: T,
}

impl<T: Scalar> DelayedLogistic<T> {
    pub fn growth_rate(&self, t: T) -> T {
        self.a0 * (T::one() + self.forcing * (T::TAU() * t / self.omega).sin())
    }
}

impl<T: Scalar> Nonlinearity<T> for DelayedLogistic<T> {
    fn eval(&self, t: T, u_t: &SegmentView<'_, T>) -> SpatialField<T> {
        let a = self.growth_rate(t);
        let head = u_t.head();
        let values = head
            .values()
            .iter()
            .zip(u_t.tail().values())
            .map(|(u, lag)| *u * (a - self.b * *lag))
            .collect();
        SpatialField::from_raw(head.grid().clone(), head.components(), values)
    }
}

/// The delayed-logistic problem of `m` with `omega`-periodic forcing and the
/// half-equilibrium as initial segment.
pub fn build_delayed_logistic<T: Scalar>(m: &RdModel<T>) -> Result<FdeProblem<T>> {
    m.validate()?;
    build(m)
}

/// As [`build_delayed_logistic`] but accepting `b <= 0`. Only for probing
/// models outside the boundedness hypothesis.
pub fn build_delayed_logistic_unchecked<T: Scalar>(m: &RdModel<T>) -> Result<FdeProblem<T>> {
    m.check_shape()?;
    build(m)
}

fn build<T: Scalar>(m: &RdModel<T>) -> Result<FdeProblem<T>> {
    let sg: Arc<dyn Semigroup<T>> = Arc::new(m.semigroup()?);
    let f: Arc<dyn Nonlinearity<T>> =
        Arc::new(DelayedLogistic { a0: m.a0, b: m.b, forcing: m.forcing, omega: m.omega });
    let start = if m.b > T::zero() { m.equilibrium() / T::lit(2.0) } else { m.a0 };
    FdeProblem::new(sg, f, m.constant_segment(start, 1)?)?.with_period(m.omega)
}
