//! State space `X` (grid-sampled fields with the sup norm) and the history
//! space `C([-tau, 0], X)` with its sup norm and exponentially weighted norm.

mod field;
mod segment;

pub use field::{sup_norm, SpatialField, SpatialGrid};
pub use segment::{HistorySegment, SegmentView};

use crate::error::{LabError, Result};
use crate::scalar::Scalar;

/// Weight `h(theta) = exp(-r theta)` on `[-tau, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormWeights<T> {
    r: T,
    tau: T,
}

impl<T: Scalar> RenormWeights<T> {
    pub fn new(r: T, tau: T) -> Result<Self> {
        if !(r >= T::zero()) || !r.is_finite() {
            return Err(LabError::Domain(format!("renorm rate must be >= 0, got {r}")));
        }
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(LabError::Domain(format!("delay must be positive, got {tau}")));
        }
        Ok(Self { r, tau })
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    /// `h(theta)`, between 1 and `exp(r tau)` on the segment domain.
    pub fn weight(&self, theta: T) -> T {
        (-self.r * theta).exp()
    }

    /// `1 / h(-tau) = exp(-r tau)`, the lower equivalence constant.
    pub fn lower_constant(&self) -> T {
        (-self.r * self.tau).exp()
    }
}

/// `sup_theta |phi(theta)|`, attained at a node for piecewise-linear segments.
pub fn segment_sup_norm<T: Scalar>(phi: &HistorySegment<T>) -> T {
    phi.fields().iter().fold(T::zero(), |acc, f| acc.max(f.norm()))
}

/// `max_j |phi(theta_j)| * exp(r theta_j)` over the theta nodes.
///
/// Unlike the plain sup norm this is the nodal (discrete) weighted norm: between
/// nodes the weighted interpolant can peak slightly above its nodal values.
pub fn renorm<T: Scalar>(phi: &HistorySegment<T>, w: &RenormWeights<T>) -> Result<T> {
    check_tau(phi, w)?;
    Ok(renorm_unchecked(phi, w.r()))
}

pub(crate) fn renorm_unchecked<T: Scalar>(phi: &HistorySegment<T>, r: T) -> T {
    phi.fields()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (j, f)| acc.max(f.norm() * (r * phi.theta(j)).exp()))
}

/// Weighted distance `|a - b|_r*` without materializing the difference.
pub fn renorm_distance<T: Scalar>(
    a: &HistorySegment<T>,
    b: &HistorySegment<T>,
    w: &RenormWeights<T>,
) -> Result<T> {
    check_tau(a, w)?;
    if !a.same_layout(b) {
        return Err(LabError::Dimension("segments have different layouts".into()));
    }
    Ok(a.fields()
        .iter()
        .zip(b.fields())
        .enumerate()
        .fold(T::zero(), |acc, (j, (x, y))| {
            acc.max(x.distance(y) * (w.r() * a.theta(j)).exp())
        }))
}

fn check_tau<T: Scalar>(phi: &HistorySegment<T>, w: &RenormWeights<T>) -> Result<()> {
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) * w.tau();
    if (phi.tau() - w.tau()).abs() > tol {
        return Err(LabError::Dimension(format!(
            "segment delay {} does not match weight delay {}",
            phi.tau(),
            w.tau()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;

    fn scalar(v: f64) -> SpatialField<f64> {
        SpatialField::constant(Arc::new(SpatialGrid::point()), 1, v)
    }

    fn segment_from(values: &[f64], tau: f64) -> HistorySegment<f64> {
        HistorySegment::new(tau, values.iter().map(|v| scalar(*v)).collect()).unwrap()
    }

    #[test]
    fn segment_sup_norm_examples() {
        assert_eq!(segment_sup_norm(&segment_from(&[0.0; 5], 1.0)), 0.0);
        let ramp = HistorySegment::from_fn(1.0, 8, scalar).unwrap();
        assert_eq!(segment_sup_norm(&ramp), 1.0);
        assert_eq!(segment_sup_norm(&segment_from(&[-2.5; 4], 1.0)), 2.5);
    }

    #[test]
    fn renorm_examples() {
        let phi = segment_from(&[0.3, -1.7, 0.9, 0.4], 1.0);
        let w0 = RenormWeights::new(0.0, 1.0).unwrap();
        assert_eq!(renorm(&phi, &w0).unwrap(), segment_sup_norm(&phi));

        let c = segment_from(&[2.0; 6], 1.0);
        let w = RenormWeights::new(1.3, 1.0).unwrap();
        assert_eq!(renorm(&c, &w).unwrap(), 2.0);

        let r: f64 = 0.8;
        let weighted = HistorySegment::from_fn(1.0, 10, |t| scalar(3.0 * (-r * t).exp())).unwrap();
        let w = RenormWeights::new(r, 1.0).unwrap();
        for (j, f) in weighted.fields().iter().enumerate() {
            let v = f.norm() * (r * weighted.theta(j)).exp();
            assert!((v - 3.0).abs() < 1e-14);
        }
        assert!((renorm(&weighted, &w).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn renorm_rejects_mismatched_delay() {
        let phi = segment_from(&[1.0, 1.0], 1.0);
        let w = RenormWeights::new(1.0, 2.0).unwrap();
        assert!(matches!(renorm(&phi, &w), Err(LabError::Dimension(_))));
        assert!(RenormWeights::new(-1.0, 1.0).is_err());
        assert!(RenormWeights::new(1.0, 0.0).is_err());
    }

    fn arb_values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 2..20)
    }

    proptest! {
        #[test]
        fn norm_equivalence_sandwich(values in arb_values(), r in 0.0f64..4.0, tau in 0.1f64..3.0) {
            let phi = segment_from(&values, tau);
            let w = RenormWeights::new(r, tau).unwrap();
            let sup = segment_sup_norm(&phi);
            let rn = renorm(&phi, &w).unwrap();
            prop_assert!(w.lower_constant() * sup <= rn * (1.0 + 1e-15));
            prop_assert!(rn <= sup);
            prop_assert!(phi.head().norm() <= rn);
        }

        #[test]
        fn renorm_is_non_increasing_in_r(values in arb_values(), r1 in 0.0f64..4.0, dr in 0.0f64..4.0) {
            let phi = segment_from(&values, 1.0);
            let a = renorm(&phi, &RenormWeights::new(r1, 1.0).unwrap()).unwrap();
            let b = renorm(&phi, &RenormWeights::new(r1 + dr, 1.0).unwrap()).unwrap();
            prop_assert!(b <= a);
        }

        #[test]
        fn norms_are_homogeneous_and_subadditive(
            pair in (2usize..16).prop_flat_map(|n| (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
            )),
            a in -3.0f64..3.0,
            r in 0.0f64..3.0,
        ) {
            let x = segment_from(&pair.0, 1.0);
            let y = segment_from(&pair.1, 1.0);
            let w = RenormWeights::new(r, 1.0).unwrap();
            let tol = |v: f64| 1e-12 * v.abs().max(1.0);
            let sx = segment_sup_norm(&x);
            prop_assert!((segment_sup_norm(&x.scaled(a)) - a.abs() * sx).abs() <= tol(sx));
            let rx = renorm(&x, &w).unwrap();
            prop_assert!((renorm(&x.scaled(a), &w).unwrap() - a.abs() * rx).abs() <= tol(rx));
            let sum = x.combine(1.0, &y, 1.0);
            let ry = renorm(&y, &w).unwrap();
            prop_assert!(segment_sup_norm(&sum) <= sx + segment_sup_norm(&y) + tol(sx));
            prop_assert!(renorm(&sum, &w).unwrap() <= rx + ry + tol(rx + ry));
            let d = renorm_distance(&x, &y, &w).unwrap();
            prop_assert!((d - renorm(&x.minus(&y), &w).unwrap()).abs() <= tol(d));
        }
    }
}
