//! Strongly continuous semigroups `T(t)`: the spectral Neumann diffusion flow,
//! dense matrix exponentials, and the damped flow `exp(-r t) T(t)`, together
//! with the star norm and the uniform-continuity modulus `delta(eps)`.

mod damped;
mod matrix;
mod spectral;

use std::fmt::Debug;

pub use damped::DampedSemigroup;
pub use matrix::MatrixSemigroup;
pub use spectral::SpectralNeumannSemigroup;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::state_space::SpatialField;

/// A semigroup of bounded operators on the field space.
pub trait Semigroup<T: Scalar>: Debug + Send + Sync {
    /// `T(t) x`, for `t >= 0`.
    fn apply(&self, t: T, x: &SpatialField<T>) -> Result<SpatialField<T>>;

    /// `M` with `|T(t)| <= M` for all `t >= 0`.
    fn bound(&self) -> T;

    fn is_contraction(&self) -> bool;

    fn compact_for_positive_t(&self) -> bool;

    /// Induced sup-norm operator norm `|T(t)|`.
    fn operator_norm(&self, t: T) -> Result<T>;

    /// Decay rates of a diagonal representation, when the model has one.
    fn modal_rates(&self) -> Option<Vec<T>>;

    /// `|exp(-shift s1) T(s1) - exp(-shift s2) T(s2)|`.
    fn shifted_difference_norm(&self, s1: T, s2: T, shift: T) -> Result<T>;

    /// Exponential decay rate of the slowest non-growing mode; `None` when the
    /// flow is bounded without being exponentially stable.
    fn slowest_decay_rate(&self) -> Option<T>;

    /// Checks that `x` lives in this semigroup's state space.
    fn accepts(&self, x: &SpatialField<T>) -> Result<()>;
}

pub(crate) fn check_time<T: Scalar>(t: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(LabError::Domain(format!("semigroup time must be >= 0, got {t}")));
    }
    Ok(())
}

pub(crate) fn modal_difference<T: Scalar>(rates: &[T], s1: T, s2: T, shift: T) -> T {
    rates.iter().fold(T::zero(), |acc, mu| {
        let rate = *mu + shift;
        acc.max(((-rate * s1).exp() - (-rate * s2).exp()).abs())
    })
}

/// `0` followed by `points` log-spaced times ending at `horizon`.
pub(crate) fn log_time_grid(horizon: f64, points: usize) -> Vec<f64> {
    let start = horizon * 1e-6;
    let ratio = (horizon / start).ln();
    std::iter::once(0.0)
        .chain((0..points).map(|i| start * (ratio * i as f64 / (points - 1) as f64).exp()))
        .collect()
}

/// Default grid for [`star_norm`]: `0` plus log-spaced times up to the point
/// where the slowest mode has decayed below `1e-12`.
pub fn star_grid<T: Scalar>(s: &dyn Semigroup<T>, points: usize) -> Vec<T> {
    let horizon = match s.slowest_decay_rate() {
        Some(sigma) if sigma > T::zero() => 12.0 * std::f64::consts::LN_10 / sigma.to_f64_lossy(),
        _ => 1e3,
    };
    log_time_grid(horizon, points.max(2)).into_iter().map(T::lit).collect()
}

/// `|x|* = sup_t |T(t) x|`, the sup taken over `t_grid`.
///
/// Contraction semigroups attain the sup at `t = 0`, so the grid is bypassed.
pub fn star_norm<T: Scalar>(s: &dyn Semigroup<T>, x: &SpatialField<T>, t_grid: &[T]) -> Result<T> {
    if t_grid.is_empty() {
        return Err(LabError::Usage("star norm needs a non-empty time grid".into()));
    }
    if !t_grid.iter().any(|t| *t == T::zero()) {
        return Err(LabError::Usage("star norm time grid must contain 0".into()));
    }
    s.accepts(x)?;
    if s.is_contraction() {
        return Ok(x.norm());
    }
    t_grid.iter().try_fold(T::zero(), |acc, t| Ok(acc.max(s.apply(*t, x)?.norm())))
}

/// Returns `delta < eps` such that `|T(s1) - T(s2)| < eps` for all
/// `s1, s2` in `[eps, t]` with `|s1 - s2| < delta`.
///
/// For diagonal models the worst pair for each mode sits at an end of the
/// interval, which gives the modulus in closed form; otherwise it is sampled.
/// The largest admissible `delta` is then located by bisection.
pub fn uniform_continuity_delta<T: Scalar>(s: &DampedSemigroup<T>, eps: T, t: T) -> Result<T> {
    if !(eps > T::zero()) || !(eps < t) {
        return Err(LabError::Usage(format!("need 0 < eps < t, got eps = {eps}, t = {t}")));
    }
    if !s.compact_for_positive_t() {
        return Err(LabError::UnsupportedModel(
            "flow is the identity; no uniform-continuity modulus to compute".into(),
        ));
    }
    let modulus = |delta: T| -> Result<T> {
        let d = delta.min(t - eps);
        if let Some(rates) = s.modal_rates() {
            return Ok(rates.iter().fold(T::zero(), |acc, mu| {
                let near = ((-*mu * eps).exp() - (-*mu * (eps + d)).exp()).abs();
                let far = ((-*mu * (t - d)).exp() - (-*mu * t).exp()).abs();
                acc.max(near).max(far)
            }));
        }
        let samples = 128;
        let span = t - d - eps;
        (0..=samples).try_fold(T::zero(), |acc, i| {
            let s1 = eps + span * T::count(i) / T::count(samples);
            Ok(acc.max(s.shifted_difference_norm(s1, s1 + d, T::zero())?))
        })
    };
    let cap = eps * (T::one() - T::lit(1e-6));
    if modulus(cap)? < eps {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (T::zero(), cap);
    for _ in 0..100 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if modulus(mid)? < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !(lo > T::zero()) {
        return Err(LabError::UnsupportedModel(
            "no positive delta satisfies the continuity bound".into(),
        ));
    }
    Ok(lo)
}
