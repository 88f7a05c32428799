use std::sync::Arc;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::state_space::SpatialField;

use super::{check_time, Semigroup};

/// `exp(-r t) T(t)` over a base semigroup.
#[derive(Debug, Clone)]
pub struct DampedSemigroup<T> {
    base: Arc<dyn Semigroup<T>>,
    r: T,
}

impl<T: Scalar> DampedSemigroup<T> {
    /// # Panics
    /// If `r` is negative or not finite.
    pub fn new(base: Arc<dyn Semigroup<T>>, r: T) -> Self {
        assert!(r >= T::zero() && r.is_finite(), "damping rate must be >= 0, got {r}");
        Self { base, r }
    }

    pub fn base(&self) -> &Arc<dyn Semigroup<T>> {
        &self.base
    }

    pub fn r(&self) -> T {
        self.r
    }
}

impl<T: Scalar> Semigroup<T> for DampedSemigroup<T> {
    fn apply(&self, t: T, x: &SpatialField<T>) -> Result<SpatialField<T>> {
        check_time(t)?;
        let mut out = self.base.apply(t, x)?;
        if self.r != T::zero() {
            out.scale((-self.r * t).exp());
        }
        Ok(out)
    }

    fn bound(&self) -> T {
        self.base.bound()
    }

    fn is_contraction(&self) -> bool {
        self.base.is_contraction()
    }

    /// The base flag, or any positive damping: in this finite-mode setting
    /// every flow is compact, and the flag only separates out the identity flow.
    fn compact_for_positive_t(&self) -> bool {
        self.base.compact_for_positive_t() || self.r > T::zero()
    }

    fn operator_norm(&self, t: T) -> Result<T> {
        Ok((-self.r * t).exp() * self.base.operator_norm(t)?)
    }

    fn modal_rates(&self) -> Option<Vec<T>> {
        self.base.modal_rates().map(|rates| rates.into_iter().map(|mu| mu + self.r).collect())
    }

    fn shifted_difference_norm(&self, s1: T, s2: T, shift: T) -> Result<T> {
        self.base.shifted_difference_norm(s1, s2, shift + self.r)
    }

    fn slowest_decay_rate(&self) -> Option<T> {
        match self.base.slowest_decay_rate() {
            Some(sigma) => Some(sigma + self.r),
            None if self.r > T::zero() => Some(self.r),
            None => None,
        }
    }

    fn accepts(&self, x: &SpatialField<T>) -> Result<()> {
        self.base.accepts(x)
    }
}
