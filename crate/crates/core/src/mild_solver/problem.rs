use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::scalar::{integral_ratio, Scalar};
use crate::semigroups::Semigroup;
use crate::state_space::{HistorySegment, SegmentView, SpatialField};

/// The nonlinearity `F(t, u_t)` of a delayed evolution equation.
///
/// Implementations must be continuous and map bounded sets of segments to
/// bounded fields. Any `Fn(T, &SegmentView<T>) -> SpatialField<T>` qualifies.
pub trait Nonlinearity<T: Scalar>: Send + Sync {
    fn eval(&self, t: T, u_t: &SegmentView<'_, T>) -> SpatialField<T>;
}

impl<T, G> Nonlinearity<T> for G
where
    T: Scalar,
    G: Fn(T, &SegmentView<'_, T>) -> SpatialField<T> + Send + Sync,
{
    fn eval(&self, t: T, u_t: &SegmentView<'_, T>) -> SpatialField<T> {
        self(t, u_t)
    }
}

/// `F = 0`: the equation reduces to the linear flow `u(t) = T(t) phi(0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForcing;

impl<T: Scalar> Nonlinearity<T> for ZeroForcing {
    fn eval(&self, _t: T, u_t: &SegmentView<'_, T>) -> SpatialField<T> {
        SpatialField::zeros(u_t.head().grid().clone(), u_t.head().components())
    }
}

/// `u'(t) = A u(t) + F(t, u_t)`, `u_0 = phi`.
#[derive(Clone)]
pub struct FdeProblem<T: Scalar> {
    semigroup: Arc<dyn Semigroup<T>>,
    forcing: Arc<dyn Nonlinearity<T>>,
    initial: HistorySegment<T>,
    period: Option<T>,
}

impl<T: Scalar> FdeProblem<T> {
    pub fn new(
        semigroup: Arc<dyn Semigroup<T>>,
        forcing: Arc<dyn Nonlinearity<T>>,
        initial: HistorySegment<T>,
    ) -> Result<Self> {
        semigroup.accepts(initial.head())?;
        Ok(Self { semigroup, forcing, initial, period: None })
    }

    /// Declares `F` to be `omega`-periodic in `t`.
    pub fn with_period(mut self, omega: T) -> Result<Self> {
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(LabError::Domain(format!("period must be positive, got {omega}")));
        }
        self.period = Some(omega);
        Ok(self)
    }

    /// Same equation, new initial segment (same delay).
    pub fn with_initial(&self, initial: HistorySegment<T>) -> Result<Self> {
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) * self.tau();
        if (initial.tau() - self.tau()).abs() > tol {
            return Err(LabError::Dimension(format!(
                "initial segment delay {} differs from problem delay {}",
                initial.tau(),
                self.tau()
            )));
        }
        self.semigroup.accepts(initial.head())?;
        Ok(Self { initial, ..self.clone() })
    }

    pub fn semigroup(&self) -> &Arc<dyn Semigroup<T>> {
        &self.semigroup
    }

    pub fn forcing(&self) -> &Arc<dyn Nonlinearity<T>> {
        &self.forcing
    }

    pub fn tau(&self) -> T {
        self.initial.tau()
    }

    pub fn initial(&self) -> &HistorySegment<T> {
        &self.initial
    }

    pub fn period(&self) -> Option<T> {
        self.period
    }

    /// `F^(t, phi) = r phi(0) + F(t, phi)`, with output checks.
    pub(crate) fn shifted_forcing(
        &self,
        r: T,
        t: T,
        u_t: &SegmentView<'_, T>,
    ) -> Result<SpatialField<T>> {
        let mut f = self.forcing.eval(t, u_t);
        if !f.same_shape(u_t.head()) {
            return Err(LabError::Model {
                t: t.to_f64_lossy(),
                reason: "nonlinearity output shape differs from the state shape".into(),
            });
        }
        if r != T::zero() {
            f.add_scaled(r, u_t.head());
        }
        if !f.is_finite() {
            return Err(LabError::Model {
                t: t.to_f64_lossy(),
                reason: "nonlinearity returned a non-finite value".into(),
            });
        }
        Ok(f)
    }
}

impl<T: Scalar> fmt::Debug for FdeProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdeProblem")
            .field("semigroup", &self.semigroup)
            .field("tau", &self.tau())
            .field("period", &self.period)
            .finish_non_exhaustive()
    }
}

/// Step size, fixed-point tolerances and the damping `r` of the transformed equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub step: T,
    pub picard_tol: T,
    pub picard_max_iters: usize,
    pub r: T,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(step: T) -> Self {
        Self { step, picard_tol: T::lit(1e-10), picard_max_iters: 50, r: T::zero() }
    }

    pub fn with_r(mut self, r: T) -> Self {
        self.r = r;
        self
    }

    pub fn with_picard(mut self, tol: T, max_iters: usize) -> Self {
        self.picard_tol = tol;
        self.picard_max_iters = max_iters;
        self
    }

    /// Checks the config and returns `tau / step`.
    pub fn intervals_for(&self, tau: T) -> Result<usize> {
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return Err(LabError::Usage(format!("step must be positive, got {}", self.step)));
        }
        if !(self.picard_tol > T::zero()) {
            return Err(LabError::Usage("fixed-point tolerance must be positive".into()));
        }
        if self.picard_max_iters == 0 {
            return Err(LabError::Usage("fixed-point iteration cap must be at least 1".into()));
        }
        if !(self.r >= T::zero()) || !self.r.is_finite() {
            return Err(LabError::Usage(format!("damping r must be >= 0, got {}", self.r)));
        }
        match integral_ratio(tau / self.step) {
            Some(n) if n >= 1 => Ok(n),
            _ => Err(LabError::Usage(format!(
                "step {} does not divide the delay {tau}",
                self.step
            ))),
        }
    }

    /// Number of steps needed to reach `t` exactly.
    pub fn steps_to(&self, t: T) -> Result<usize> {
        match integral_ratio(t / self.step) {
            Some(n) => Ok(n),
            None => Err(LabError::Usage(format!("t = {t} is not on the step grid {}", self.step))),
        }
    }
}
