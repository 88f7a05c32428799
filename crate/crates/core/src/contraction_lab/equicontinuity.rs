use std::io::Write;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::mild_solver::{solve, FdeProblem, SolverConfig};
use crate::scalar::{fmt17, Scalar};
use crate::semigroups::{uniform_continuity_delta, DampedSemigroup, Semigroup};
use crate::state_space::{HistorySegment, SpatialField};

use super::decomposition::{qbar_from_forcing, shifted_forcing_along};

/// Which form of the modulus bound applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuityRegime {
    /// `t <= tau`: bound `(t + 5) K eps`.
    WithinDelay,
    /// `t > tau`: bound `(t + 3) K eps`.
    BeyondDelay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquicontinuityReport<T> {
    pub t: T,
    pub epsilon: T,
    pub delta: T,
    /// `sup |F^(s, u_s(phi))|` over `s in [0, t]` and the whole set.
    pub k_bound: T,
    /// Largest `|Qbar(t)phi(a) - Qbar(t)phi(b)|` with `|a - b| < delta`.
    pub measured_modulus: T,
    pub bound: T,
    pub regime: ContinuityRegime,
    /// `min (M K (t + theta) - |Qbar(t)phi(theta)|)` over `t + theta in (0, eps]`;
    /// `-inf` if some node with `t + theta <= 0` is nonzero.
    pub tail_margin: T,
    pub passed: bool,
}

pub fn write_equicontinuity_csv<T: Scalar, W: Write>(reports: &[EquicontinuityReport<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "epsilon", "delta", "K", "measured_modulus", "bound", "tail_margin", "passed"])?;
    for rep in reports {
        w.write_record([
            fmt17(rep.t),
            fmt17(rep.epsilon),
            fmt17(rep.delta),
            fmt17(rep.k_bound),
            fmt17(rep.measured_modulus),
            fmt17(rep.bound),
            fmt17(rep.tail_margin),
            rep.passed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Modulus of the piecewise-linear segment over pairs closer than `delta`.
/// Sampled on the nodes and on a sub-grid no coarser than `delta / 4`, so the
/// result is not vacuous when `delta` is below the node spacing.
fn segment_modulus<T: Scalar>(seg: &HistorySegment<T>, delta: T) -> Result<T> {
    let h = seg.step();
    let refine = (T::lit(4.0) * h / delta).ceil().to_usize().unwrap_or(1).clamp(1, 4096);
    let fine = h / T::count(refine);
    let points = seg.intervals() * refine;
    let values = (0..=points)
        .map(|i| {
            let theta = (T::count(i) * fine - seg.tau()).min(T::zero());
            seg.evaluate(theta)
        })
        .collect::<Result<Vec<SpatialField<T>>>>()?;
    let max_offset = {
        let k = (delta / fine).floor().to_usize().unwrap_or(0);
        // strict inequality |a - b| < delta
        if T::count(k) * fine >= delta { k.saturating_sub(1) } else { k }
    };
    let mut worst = T::zero();
    for d in 1..=max_offset.min(points) {
        for i in 0..=points - d {
            worst = worst.max(values[i].distance(&values[i + d]));
        }
    }
    Ok(worst)
}

/// Measures the uniform-continuity modulus of `Qbar(t)` on a finite set and
/// compares it with the bound `(t + 5) K eps` (`t <= tau`) or `(t + 3) K eps`.
pub fn equicontinuity_report<T: Scalar>(
    t: T,
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    set: &[HistorySegment<T>],
    eps: T,
) -> Result<EquicontinuityReport<T>> {
    if set.is_empty() {
        return Err(LabError::Usage("need at least one segment".into()));
    }
    let intervals = cfg.intervals_for(p.tau())?;
    cfg.steps_to(t)?;
    let flow = DampedSemigroup::new(p.semigroup().clone(), cfg.r);
    let delta = uniform_continuity_delta(&flow, eps, t)?;
    let parts = set
        .par_iter()
        .map(|phi| {
            let problem = p.with_initial(phi.resample(intervals)?)?;
            let traj = solve(&problem, cfg, t)?;
            let forcing = shifted_forcing_along(&problem, cfg.r, &traj, t)?;
            let k = forcing.iter().fold(T::zero(), |a, f| a.max(f.norm()));
            let qbar = qbar_from_forcing(&flow, &forcing, cfg.step, p.tau(), intervals)?;
            Ok((k, qbar))
        })
        .collect::<Result<Vec<_>>>()?;
    let k_bound = parts.iter().fold(T::zero(), |a, (k, _)| a.max(*k));
    let m = flow.bound();
    let slack = T::rounding_slack();
    let mut measured = T::zero();
    let mut tail_margin = T::infinity();
    for (_, qbar) in &parts {
        measured = measured.max(segment_modulus(qbar, delta)?);
        for (j, theta) in qbar.thetas().enumerate() {
            let arg = t + theta;
            let value = qbar.node(j).norm();
            if arg <= slack {
                if value != T::zero() {
                    tail_margin = T::neg_infinity();
                }
            } else if arg <= eps {
                tail_margin = tail_margin.min(m * k_bound * arg - value);
            }
        }
    }
    let (regime, factor) = if t <= p.tau() {
        (ContinuityRegime::WithinDelay, T::lit(5.0))
    } else {
        (ContinuityRegime::BeyondDelay, T::lit(3.0))
    };
    let bound = (t + factor) * k_bound * eps;
    let passed = measured <= bound + slack && tail_margin >= -slack;
    Ok(EquicontinuityReport {
        t,
        epsilon: eps,
        delta,
        k_bound,
        measured_modulus: measured,
        bound,
        regime,
        tail_margin,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::state_space::SpatialGrid;

    fn scalar_segment(tau: f64, intervals: usize, f: impl Fn(f64) -> f64) -> HistorySegment<f64> {
        let grid = Arc::new(SpatialGrid::point());
        HistorySegment::from_fn(tau, intervals, |theta| {
            SpatialField::new(grid.clone(), 1, vec![f(theta)]).unwrap()
        })
        .unwrap()
    }

    #[test]
    fn modulus_of_a_line_is_slope_times_gap() {
        // slope 2, pairs strictly closer than 0.1: sup approaches 0.2 from below
        let seg = scalar_segment(1.0, 4, |th| 2.0 * th);
        let m = segment_modulus(&seg, 0.1).unwrap();
        assert!(m < 0.2 && m > 0.15, "{m}");
    }

    #[test]
    fn modulus_sees_kinks_between_nodes() {
        // delta far below the node spacing must still register the slope
        let seg = scalar_segment(1.0, 2, |th| if th == -0.5 { 1.0 } else { 0.0 });
        let m = segment_modulus(&seg, 0.01).unwrap();
        assert!(m > 0.015 && m < 0.02, "{m}");
    }
}
