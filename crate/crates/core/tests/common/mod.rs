#![allow(dead_code)]

use std::sync::Arc;

use fde_lab::mild_solver::{FdeProblem, Nonlinearity};
use fde_lab::semigroups::{MatrixSemigroup, Semigroup};
use fde_lab::state_space::{HistorySegment, SegmentView, SpatialField, SpatialGrid};

pub fn scalar_field(v: f64) -> SpatialField<f64> {
    SpatialField::constant(Arc::new(SpatialGrid::point()), 1, v)
}

/// `u'(t) = -u(t - 1)` with `phi = initial`, on the one-point state space.
pub fn linear_delay_problem(initial: impl Fn(f64) -> f64, intervals: usize) -> FdeProblem<f64> {
    let sg: Arc<dyn Semigroup<f64>> = Arc::new(MatrixSemigroup::zero(1));
    let f: Arc<dyn Nonlinearity<f64>> =
        Arc::new(|_t: f64, u: &SegmentView<'_, f64>| u.tail().scaled(-1.0));
    let phi = HistorySegment::from_fn(1.0, intervals, |t| scalar_field(initial(t))).unwrap();
    FdeProblem::new(sg, f, phi).unwrap()
}

/// Method-of-steps closed form of `u'(t) = -u(t - 1)`, `u = 1` on `[-1, 0]`.
///
/// On `[k, k + 1]` the solution is a polynomial `p_k(t)`; each piece is the
/// exact antiderivative of `-p_{k-1}(t - 1)`. Coefficients are kept in the
/// local variable `s = t - k`, so `p_{k-1}(t - 1)` has the same local coefficients.
pub struct MethodOfSteps {
    pieces: Vec<Vec<f64>>,
}

impl MethodOfSteps {
    pub fn new(intervals: usize) -> Self {
        let mut pieces = vec![vec![1.0]];
        for _ in 0..intervals {
            let prev = pieces.last().unwrap();
            let start: f64 = prev.iter().sum();
            let mut next = vec![start];
            for (i, c) in prev.iter().enumerate() {
                next.push(-c / (i as f64 + 1.0));
            }
            pieces.push(next);
        }
        Self { pieces }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let k = (t.ceil() as usize).max(1).min(self.pieces.len() - 1);
        let s = t - (k - 1) as f64;
        self.pieces[k].iter().rev().fold(0.0, |acc, c| acc * s + c)
    }
}

/// Classical RK4 for the scalar `u' = u (a - b u(t - tau))` with constant
/// history `c`, step `tau / m`, delayed values taken from stored nodes and
/// midpoints from cubic Hermite interpolation.
pub fn rk4_delayed_logistic(a: f64, b: f64, tau: f64, c: f64, m: usize, t_end: f64) -> Vec<(f64, f64)> {
    let h = tau / m as f64;
    let steps = (t_end / h).round() as usize;
    let rhs = |u: f64, lag: f64| u * (a - b * lag);
    let mut u = vec![c];
    let mut du = vec![rhs(c, c)];
    let lag_at = |u: &Vec<f64>, du: &Vec<f64>, n: usize, half: bool| -> f64 {
        // value at t_n + (half ? h/2 : 0) - tau
        if n < m {
            return c;
        }
        let i = n - m;
        if !half {
            return u[i];
        }
        let (y0, y1, d0, d1) = (u[i], u[i + 1], du[i], du[i + 1]);
        0.5 * (y0 + y1) + h / 8.0 * (d0 - d1)
    };
    let mut out = vec![(0.0, c)];
    for n in 0..steps {
        let y = u[n];
        let l0 = lag_at(&u, &du, n, false);
        let lh = lag_at(&u, &du, n, true);
        let l1 = if n + 1 < m { c } else { u[n + 1 - m] };
        let k1 = rhs(y, l0);
        let k2 = rhs(y + h / 2.0 * k1, lh);
        let k3 = rhs(y + h / 2.0 * k2, lh);
        let k4 = rhs(y + h * k3, l1);
        let next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        u.push(next);
        du.push(rhs(next, l1));
        out.push(((n + 1) as f64 * h, next));
    }
    out
}
