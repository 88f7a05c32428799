use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::mild_solver::{solve, FdeProblem, SolverConfig, Trajectory};
use crate::scalar::{fmt17, Scalar};
use crate::semigroups::{DampedSemigroup, Semigroup};
use crate::state_space::{
    renorm_distance, renorm_unchecked, segment_sup_norm, HistorySegment, RenormWeights,
    SpatialField,
};

use super::sampling::SampleSpec;

/// How `L(t)` treats the part of the segment still inside the initial history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistoryBranch {
    /// `(L(t) phi)(theta) = phi(t + theta)` for `t + theta <= 0`.
    #[default]
    Exact,
    /// Reads one theta node too far back. Negative control only: it must be
    /// caught by the contraction checks.
    OffByOneNode,
}

/// `(L(t) phi)(theta) = T^(t + theta) phi(0)` where `t + theta > 0`, else
/// `phi(t + theta)`, with `T^(s) = exp(-r s) T(s)`.
pub fn l_op<T: Scalar>(
    t: T,
    phi: &HistorySegment<T>,
    r: T,
    s: &Arc<dyn Semigroup<T>>,
) -> Result<HistorySegment<T>> {
    l_op_with_branch(t, phi, r, s, HistoryBranch::Exact)
}

pub fn l_op_with_branch<T: Scalar>(
    t: T,
    phi: &HistorySegment<T>,
    r: T,
    s: &Arc<dyn Semigroup<T>>,
    branch: HistoryBranch,
) -> Result<HistorySegment<T>> {
    if !(t >= T::zero()) {
        return Err(LabError::Domain(format!("L(t) needs t >= 0, got {t}")));
    }
    if !(r >= T::zero()) {
        return Err(LabError::Domain(format!("damping r must be >= 0, got {r}")));
    }
    let flow = DampedSemigroup::new(s.clone(), r);
    let snap = T::epsilon() * T::lit(64.0) * (t + phi.tau());
    let fields = phi
        .thetas()
        .map(|theta| {
            let arg = t + theta;
            if arg > snap {
                flow.apply(arg, phi.head())
            } else {
                let arg = arg.min(T::zero());
                match branch {
                    HistoryBranch::Exact => phi.evaluate(arg),
                    HistoryBranch::OffByOneNode => phi.evaluate((arg - phi.step()).max(-phi.tau())),
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    HistorySegment::new(phi.tau(), fields)
}

/// `F^(s_i, u_{s_i})` at every step node `s_i in [0, t]` of a solved trajectory.
pub(crate) fn shifted_forcing_along<T: Scalar>(
    p: &FdeProblem<T>,
    r: T,
    traj: &Trajectory<T>,
    t: T,
) -> Result<Vec<SpatialField<T>>> {
    let steps = SolverConfig::new(traj.step()).steps_to(t)?;
    (0..=steps)
        .map(|i| {
            let s = T::count(i) * traj.step();
            p.shifted_forcing(r, s, &traj.view(s)?)
        })
        .collect()
}

/// `(Qbar(t) phi)(theta) = int_0^{t+theta} T^(t + theta - s) F^(s, u_s) ds`
/// by the composite exponential trapezoid rule on the solver nodes, and 0 for
/// `t + theta <= 0`. `forcing[i]` is `F^` at `s_i = i h`.
pub(crate) fn qbar_from_forcing<T: Scalar>(
    flow: &DampedSemigroup<T>,
    forcing: &[SpatialField<T>],
    step: T,
    tau: T,
    intervals: usize,
) -> Result<HistorySegment<T>> {
    let t_steps = forcing.len() - 1;
    let zero = forcing[0].scaled(T::zero());
    let half = step / T::lit(2.0);
    let fields = (0..=intervals)
        .map(|j| {
            let back = intervals - j;
            if t_steps <= back {
                return Ok(zero.clone());
            }
            let m = t_steps - back;
            let mut acc = zero.clone();
            for (i, f) in forcing.iter().enumerate().take(m + 1) {
                let w = if i == 0 || i == m { half } else { step };
                acc.add_scaled(w, &flow.apply(T::count(m - i) * step, f)?);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    HistorySegment::new(tau, fields)
}

/// `Qbar(t) phi` evaluated directly from its integral definition, reusing the
/// solver trajectory for `u_s(phi)`.
pub fn qbar_direct<T: Scalar>(
    t: T,
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    phi: &HistorySegment<T>,
) -> Result<HistorySegment<T>> {
    let intervals = cfg.intervals_for(p.tau())?;
    let problem = p.with_initial(phi.clone())?;
    let steps = cfg.steps_to(t)?;
    let flow = DampedSemigroup::new(p.semigroup().clone(), cfg.r);
    if steps == 0 {
        let zero = phi.head().scaled(T::zero());
        return HistorySegment::constant(p.tau(), intervals, &zero);
    }
    let traj = solve(&problem, cfg, t)?;
    let forcing = shifted_forcing_along(&problem, cfg.r, &traj, t)?;
    qbar_from_forcing(&flow, &forcing, cfg.step, p.tau(), intervals)
}

/// `Q(t) phi`, `L(t) phi` and `Qbar(t) phi` for one segment.
#[derive(Debug, Clone)]
pub struct Decomposition<T> {
    pub q: HistorySegment<T>,
    pub l: HistorySegment<T>,
    pub qbar: HistorySegment<T>,
    /// `|Q(t) phi - L(t) phi - Qbar(t) phi|`, segment sup norm.
    pub residual: T,
}

pub fn decompose<T: Scalar>(
    t: T,
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    phi: &HistorySegment<T>,
) -> Result<Decomposition<T>> {
    let intervals = cfg.intervals_for(p.tau())?;
    let phi = phi.resample(intervals)?;
    let steps = cfg.steps_to(t)?;
    if steps == 0 {
        return Err(LabError::Usage("decomposition needs t > 0".into()));
    }
    let problem = p.with_initial(phi.clone())?;
    let traj = solve(&problem, cfg, t)?;
    let q = traj.segment(t)?;
    let l = l_op(t, &phi, cfg.r, p.semigroup())?;
    let flow = DampedSemigroup::new(p.semigroup().clone(), cfg.r);
    let forcing = shifted_forcing_along(&problem, cfg.r, &traj, t)?;
    let qbar = qbar_from_forcing(&flow, &forcing, cfg.step, p.tau(), intervals)?;
    let residual = segment_sup_norm(&q.minus(&l).minus(&qbar));
    Ok(Decomposition { q, l, qbar, residual })
}

/// Outcome of a contraction sweep at one time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionReport<T> {
    pub t: T,
    pub r: T,
    /// `max renorm(L(t) phi) / renorm(phi)` over the samples.
    pub max_l_ratio: T,
    /// `exp(-r t)`.
    pub bound: T,
    /// `bound - max_l_ratio`.
    pub margin: T,
    /// `max |Q(t) phi - L(t) phi - Qbar(t) phi|` when the full decomposition was run.
    pub consistency_residual: Option<T>,
    pub samples: usize,
}

impl<T: Scalar> DecompositionReport<T> {
    fn new(t: T, r: T, max_l_ratio: T, samples: usize) -> Self {
        let bound = (-r * t).exp();
        Self { t, r, max_l_ratio, bound, margin: bound - max_l_ratio, consistency_residual: None, samples }
    }
}

pub fn write_decomposition_csv<T: Scalar, W: Write>(reports: &[DecompositionReport<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "r", "max_ratio", "bound", "margin", "consistency_residual", "samples"])?;
    for rep in reports {
        w.write_record([
            fmt17(rep.t),
            fmt17(rep.r),
            fmt17(rep.max_l_ratio),
            fmt17(rep.bound),
            fmt17(rep.margin),
            rep.consistency_residual.map(fmt17).unwrap_or_default(),
            rep.samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn witness_csv<T: Scalar>(segments: &[&HistorySegment<T>]) -> String {
    let mut buf = Vec::new();
    for seg in segments {
        seg.write_csv(&mut buf).expect("writing to memory");
    }
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Asserts `renorm(L(t) phi) <= exp(-r t) renorm(phi) + slack` for every
/// sample and every `t` in `t_grid`; returns the worst ratio per `t`.
pub fn verify_l_contraction<T: Scalar>(
    s: &Arc<dyn Semigroup<T>>,
    r: T,
    t_grid: &[T],
    samples: &[HistorySegment<T>],
    branch: HistoryBranch,
) -> Result<Vec<DecompositionReport<T>>> {
    if samples.is_empty() {
        return Err(LabError::Usage("need at least one sample".into()));
    }
    let slack = T::rounding_slack();
    t_grid
        .iter()
        .map(|&t| {
            let bound = (-r * t).exp();
            let worst = samples
                .par_iter()
                .map(|phi| -> Result<T> {
                    let before = renorm_unchecked(phi, r);
                    let after = renorm_unchecked(&l_op_with_branch(t, phi, r, s, branch)?, r);
                    if after > bound * before + slack {
                        return Err(LabError::PropertyFailure {
                            property: "L-contraction".into(),
                            detail: format!(
                                "t = {t}, r = {r}: renorm(L phi) = {after:e} > exp(-r t) renorm(phi) = {:e}",
                                bound * before
                            ),
                            witness_csv: Some(witness_csv(&[phi])),
                        });
                    }
                    Ok(if before > T::zero() { after / before } else { T::zero() })
                })
                .try_reduce(T::zero, |a, b| Ok(a.max(b)))?;
            Ok(DecompositionReport::new(t, r, worst, samples.len()))
        })
        .collect()
}

/// Draws `sample_count` segments from `spec` and runs [`verify_l_contraction`].
pub fn verify_l_contraction_sampled<T: Scalar>(
    s: &Arc<dyn Semigroup<T>>,
    r: T,
    t_grid: &[T],
    spec: &SampleSpec<T>,
    sample_count: usize,
) -> Result<Vec<DecompositionReport<T>>> {
    if sample_count == 0 {
        return Err(LabError::Usage("sample_count must be at least 1".into()));
    }
    verify_l_contraction(s, r, t_grid, &spec.draw(sample_count, r), HistoryBranch::Exact)
}

/// Decomposition identity over samples at each `t`, reported with the L-ratio.
pub fn decomposition_consistency<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    t_grid: &[T],
    samples: &[HistorySegment<T>],
) -> Result<Vec<DecompositionReport<T>>> {
    if samples.is_empty() {
        return Err(LabError::Usage("need at least one sample".into()));
    }
    t_grid
        .iter()
        .map(|&t| {
            let parts = samples
                .par_iter()
                .map(|phi| {
                    let d = decompose(t, p, cfg, phi)?;
                    let phi = phi.resample(d.l.intervals())?;
                    let before = renorm_unchecked(&phi, cfg.r);
                    let after = renorm_unchecked(&d.l, cfg.r);
                    let ratio = if before > T::zero() { after / before } else { T::zero() };
                    Ok((ratio, d.residual))
                })
                .collect::<Result<Vec<_>>>()?;
            let ratio = parts.iter().fold(T::zero(), |a, p| a.max(p.0));
            let residual = parts.iter().fold(T::zero(), |a, p| a.max(p.1));
            let mut rep = DecompositionReport::new(t, cfg.r, ratio, samples.len());
            rep.consistency_residual = Some(residual);
            Ok(rep)
        })
        .collect()
}

/// Worst-case margins of the equivalence `exp(-r tau) |phi| <= |phi|_r* <= |phi|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEquivalenceReport<T> {
    pub r: T,
    /// `min (renorm - exp(-r tau) sup)`; non-negative up to rounding.
    pub lower_margin: T,
    /// `min (sup - renorm)`; non-negative up to rounding.
    pub upper_margin: T,
    /// `min |renorm / sup - exp(-r tau)|` over the samples (0 when the lower bound is attained).
    pub lower_attainment_gap: T,
    pub samples: usize,
}

pub fn verify_norm_equivalence<T: Scalar>(
    r: T,
    samples: &[HistorySegment<T>],
) -> Result<NormEquivalenceReport<T>> {
    if samples.is_empty() {
        return Err(LabError::Usage("need at least one sample".into()));
    }
    let slack = T::rounding_slack();
    let mut report = NormEquivalenceReport {
        r,
        lower_margin: T::infinity(),
        upper_margin: T::infinity(),
        lower_attainment_gap: T::infinity(),
        samples: samples.len(),
    };
    for phi in samples {
        let w = RenormWeights::new(r, phi.tau())?;
        let sup = segment_sup_norm(phi);
        let rn = renorm_unchecked(phi, r);
        let lower = rn - w.lower_constant() * sup;
        let upper = sup - rn;
        if lower < -slack || upper < -slack {
            return Err(LabError::PropertyFailure {
                property: "norm equivalence".into(),
                detail: format!("r = {r}: sup = {sup:e}, renorm = {rn:e}"),
                witness_csv: Some(witness_csv(&[phi])),
            });
        }
        report.lower_margin = report.lower_margin.min(lower);
        report.upper_margin = report.upper_margin.min(upper);
        if sup > T::zero() {
            report.lower_attainment_gap =
                report.lower_attainment_gap.min((rn / sup - w.lower_constant()).abs());
        }
    }
    Ok(report)
}

pub fn write_norm_equivalence_csv<T: Scalar, W: Write>(reports: &[NormEquivalenceReport<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["r", "lower_margin", "upper_margin", "lower_attainment_gap", "samples"])?;
    for rep in reports {
        w.write_record([
            fmt17(rep.r),
            fmt17(rep.lower_margin),
            fmt17(rep.upper_margin),
            fmt17(rep.lower_attainment_gap),
            rep.samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Draws `sample_count` segments (with spikes, constants and weighted
/// exponentials mixed in) and runs [`verify_norm_equivalence`].
pub fn verify_norm_equivalence_sampled<T: Scalar>(
    r: T,
    spec: &SampleSpec<T>,
    sample_count: usize,
) -> Result<NormEquivalenceReport<T>> {
    verify_norm_equivalence(r, &spec.draw(sample_count, r))
}

/// Renorm diameters of a finite set before and after `L(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSetReport<T> {
    pub t: T,
    pub r: T,
    pub diameter_before: T,
    pub diameter_after: T,
    pub bound: T,
}

pub fn write_finite_set_csv<T: Scalar, W: Write>(reports: &[FiniteSetReport<T>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "r", "diameter_before", "diameter_after", "bound"])?;
    for rep in reports {
        w.write_record([
            fmt17(rep.t),
            fmt17(rep.r),
            fmt17(rep.diameter_before),
            fmt17(rep.diameter_after),
            fmt17(rep.bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn diameter<T: Scalar>(set: &[HistorySegment<T>], w: &RenormWeights<T>) -> Result<(T, usize, usize)> {
    let mut best = (T::zero(), 0, 0);
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let d = renorm_distance(&set[i], &set[j], w)?;
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    Ok(best)
}

/// Asserts `diam(L(t) B) <= exp(-r t) diam(B) + slack` in the renorm, which
/// holds pairwise because `L(t)` is linear.
pub fn finite_set_contraction<T: Scalar>(
    set: &[HistorySegment<T>],
    t: T,
    r: T,
    s: &Arc<dyn Semigroup<T>>,
    branch: HistoryBranch,
) -> Result<FiniteSetReport<T>> {
    if set.len() < 2 {
        return Err(LabError::Usage("finite set needs at least two segments".into()));
    }
    let w = RenormWeights::new(r, set[0].tau())?;
    let image = set
        .par_iter()
        .map(|phi| l_op_with_branch(t, phi, r, s, branch))
        .collect::<Result<Vec<_>>>()?;
    let (before, ..) = diameter(set, &w)?;
    let (after, i, j) = diameter(&image, &w)?;
    let bound = (-r * t).exp();
    if after > bound * before + T::rounding_slack() {
        return Err(LabError::PropertyFailure {
            property: "finite-set diameter contraction".into(),
            detail: format!("t = {t}, r = {r}: diam after {after:e} > {:e}", bound * before),
            witness_csv: Some(witness_csv(&[&set[i], &set[j]])),
        });
    }
    Ok(FiniteSetReport { t, r, diameter_before: before, diameter_after: after, bound })
}
