use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::semigroups::{DampedSemigroup, Semigroup};
use crate::state_space::{HistorySegment, SegmentView};

use super::{FdeProblem, SolverConfig, Trajectory};

/// Integrates the problem up to `t_end` through the damped integral form
///
/// `u(t + h) = T^(h) u(t) + int_0^h T^(h - s) F^(t + s, u_{t+s}) ds`,
/// `T^(t) = exp(-r t) T(t)`, `F^(t, phi) = r phi(0) + F(t, phi)`,
///
/// with the exponential trapezoid rule
/// `u_{n+1} = T^(h) (u_n + h/2 F^_n) + h/2 F^_{n+1}`.
/// `F^_{n+1}` depends on `u_{n+1}` through the segment head and is resolved by
/// fixed-point iteration. The initial segment is resampled onto the step grid
/// if its node count differs.
pub fn solve<T: Scalar>(p: &FdeProblem<T>, cfg: &SolverConfig<T>, t_end: T) -> Result<Trajectory<T>> {
    let history = cfg.intervals_for(p.tau())?;
    if !(t_end > T::zero()) {
        return Err(LabError::Usage(format!("t_end must be positive, got {t_end}")));
    }
    let steps = cfg.steps_to(t_end)?;
    let initial = p.initial().resample(history)?;
    let h = cfg.step;
    let half_h = h / T::lit(2.0);
    let flow = DampedSemigroup::new(p.semigroup().clone(), cfg.r);

    let mut fields = Vec::with_capacity(history + 1 + steps);
    fields.extend(initial.fields().iter().cloned());
    let mut max_iters = 0;
    let growth_slack = T::epsilon() * T::lit(64.0);

    for n in 0..steps {
        let now = history + n;
        let t_n = T::count(n) * h;
        let t_next = T::count(n + 1) * h;
        let f_n = p.shifted_forcing(cfg.r, t_n, &SegmentView::new(p.tau(), &fields[n..now], &fields[now]))?;
        let mut carried = fields[now].clone();
        carried.add_scaled(half_h, &f_n);
        let carried = flow.apply(h, &carried)?;

        let mut candidate = fields[now].clone();
        let mut previous_residual: Option<T> = None;
        let mut converged = false;
        for iter in 1..=cfg.picard_max_iters {
            let view = SegmentView::new(p.tau(), &fields[n + 1..=now], &candidate);
            let f_next = p.shifted_forcing(cfg.r, t_next, &view)?;
            let mut next = carried.clone();
            next.add_scaled(half_h, &f_next);
            if !next.is_finite() {
                return Err(LabError::Stiffness {
                    node: n + 1,
                    t: t_next.to_f64_lossy(),
                    reason: "iterate became non-finite".into(),
                });
            }
            let residual = next.distance(&candidate);
            candidate = next;
            max_iters = max_iters.max(iter);
            if residual <= cfg.picard_tol {
                converged = true;
                break;
            }
            if let Some(prev) = previous_residual {
                if residual > prev && residual > growth_slack * candidate.norm().max(T::one()) {
                    return Err(LabError::Stiffness {
                        node: n + 1,
                        t: t_next.to_f64_lossy(),
                        reason: format!("residual grew from {prev:e} to {residual:e} at iteration {iter}"),
                    });
                }
            }
            previous_residual = Some(residual);
        }
        if !converged {
            return Err(LabError::Stiffness {
                node: n + 1,
                t: t_next.to_f64_lossy(),
                reason: format!(
                    "no convergence to {:e} within {} iterations",
                    cfg.picard_tol, cfg.picard_max_iters
                ),
            });
        }
        fields.push(candidate);
    }
    Ok(Trajectory::new(p.tau(), h, history, fields, max_iters))
}

/// The solution map `Q(t): phi -> u_t`; `t` must lie on the step grid.
pub fn solution_map<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    t: T,
    phi: &HistorySegment<T>,
) -> Result<HistorySegment<T>> {
    let history = cfg.intervals_for(p.tau())?;
    if !(t >= T::zero()) {
        return Err(LabError::Usage(format!("solution map needs t >= 0, got {t}")));
    }
    let steps = cfg.steps_to(t)?;
    let problem = p.with_initial(phi.clone())?;
    if steps == 0 {
        return phi.resample(history);
    }
    solve(&problem, cfg, t)?.segment(t)
}
