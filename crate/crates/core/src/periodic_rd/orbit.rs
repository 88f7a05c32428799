use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::mild_solver::{solution_map, solve, FdeProblem, SolverConfig};
use crate::scalar::{fmt17, Scalar};
use crate::state_space::{renorm_distance, segment_sup_norm, HistorySegment, RenormWeights};

fn period_of<T: Scalar>(p: &FdeProblem<T>) -> Result<T> {
    p.period()
        .ok_or_else(|| LabError::Usage("problem has no period set".into()))
}

/// The period map `P = Q(omega)`.
pub fn period_map<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    phi: &HistorySegment<T>,
) -> Result<HistorySegment<T>> {
    solution_map(p, cfg, period_of(p)?, phi)
}

/// `|P(phi) - phi|_r*` with `phi` resampled onto the solver's theta grid.
pub fn orbit_residual<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    phi: &HistorySegment<T>,
    r: T,
) -> Result<T> {
    let phi = phi.resample(cfg.intervals_for(p.tau())?)?;
    let w = RenormWeights::new(r, p.tau())?;
    renorm_distance(&period_map(p, cfg, &phi)?, &phi, &w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbitResult<T> {
    /// Best iterate found; a fixed point of `P` when `converged`.
    pub segment: HistorySegment<T>,
    /// `|P(segment) - segment|_r*`.
    pub residual: T,
    pub iterations: usize,
    pub newton_steps: usize,
    /// Residual of the current iterate after each iteration, starting with
    /// the initial guess. Not monotone.
    pub history: Vec<T>,
    pub renorm_r: T,
    pub converged: bool,
}

impl<T: Scalar> PeriodicOrbitResult<T> {
    /// `residual,iterations` header and one row.
    pub fn write_meta_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["residual", "iterations"])?;
        w.write_record([fmt17(self.residual), self.iterations.to_string()])?;
        w.flush()?;
        Ok(())
    }

    /// `iter,residual` rows.
    pub fn write_history_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iter", "residual"])?;
        for (i, r) in self.history.iter().enumerate() {
            w.write_record([i.to_string(), fmt17(*r)])?;
        }
        w.flush()?;
        Ok(())
    }
}

const GROWTH: f64 = 4.0;
const STALL: usize = 4;

struct Iterate<T> {
    phi: HistorySegment<T>,
    image: HistorySegment<T>,
    residual: T,
}

struct Search<'a, T: Scalar> {
    p: &'a FdeProblem<T>,
    cfg: &'a SolverConfig<T>,
    weights: RenormWeights<T>,
}

impl<T: Scalar> Search<'_, T> {
    fn evaluate(&self, phi: HistorySegment<T>) -> Result<Iterate<T>> {
        let image = period_map(self.p, self.cfg, &phi)?;
        let residual = renorm_distance(&image, &phi, &self.weights)?;
        if !residual.is_finite() {
            return Err(LabError::Model { t: 0.0, reason: "period map produced non-finite values".into() });
        }
        Ok(Iterate { phi, image, residual })
    }

    /// One finite-difference Newton step on `G(phi) = P(phi) - phi`, with a
    /// backtracking line search on the renorm residual.
    fn newton(&self, cur: &Iterate<T>) -> Result<Option<Iterate<T>>> {
        let base = cur.phi.to_vec();
        let g0: Vec<f64> = cur.image.minus(&cur.phi).to_vec().iter().map(|v| v.to_f64_lossy()).collect();
        let n = base.len();
        let scale = segment_sup_norm(&cur.phi).to_f64_lossy().max(1.0);
        let eta = T::epsilon().to_f64_lossy().sqrt() * scale;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut shifted = base.clone();
            shifted[j] = shifted[j] + T::lit(eta);
            let phi = cur.phi.with_values(&shifted)?;
            let g = period_map(self.p, self.cfg, &phi)?.minus(&phi).to_vec();
            for i in 0..n {
                jac[(i, j)] = (g[i].to_f64_lossy() - g0[i]) / eta;
            }
        }
        let Some(step) = jac.lu().solve(&-DVector::from_vec(g0)) else {
            return Ok(None);
        };
        let mut lambda = 1.0;
        for _ in 0..8 {
            let values: Vec<T> = base.iter().zip(step.iter()).map(|(b, s)| *b + T::lit(lambda * s)).collect();
            if let Ok(next) = self.evaluate(cur.phi.with_values(&values)?) {
                if next.residual < cur.residual {
                    return Ok(Some(next));
                }
            }
            lambda /= 2.0;
        }
        Ok(None)
    }
}

/// Fixed point of the period map by damped Picard iteration
/// `phi <- (1 - s) phi + s P(phi)`, with `s` adapted to the residual, and a
/// finite-difference Newton step whenever the iteration stagnates. The
/// residual is measured in the renorm with `r = 1 / omega`.
///
/// Running out of iterations is not an error: the best iterate is returned
/// with `converged = false`.
pub fn find_periodic<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    phi0: &HistorySegment<T>,
    max_iters: usize,
    tol: T,
) -> Result<PeriodicOrbitResult<T>> {
    let r = period_of(p)?.recip();
    find_periodic_weighted(p, cfg, phi0, max_iters, tol, r)
}

pub fn find_periodic_weighted<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    phi0: &HistorySegment<T>,
    max_iters: usize,
    tol: T,
    r: T,
) -> Result<PeriodicOrbitResult<T>> {
    if !(tol > T::zero()) {
        return Err(LabError::Usage(format!("tolerance must be positive, got {tol}")));
    }
    period_of(p)?;
    let search = Search { p, cfg, weights: RenormWeights::new(r, p.tau())? };
    let mut cur = search.evaluate(phi0.resample(cfg.intervals_for(p.tau())?)?)?;
    let mut history = vec![cur.residual];
    let mut best = cur.residual;
    let mut best_phi = cur.phi.clone();
    let mut s = T::one();
    let min_s = T::lit(1.0 / 64.0);
    let mut stalled = 0;
    let mut iterations = 0;
    let mut newton_steps = 0;
    while cur.residual > tol && iterations < max_iters {
        iterations += 1;
        // P is no contraction in this norm: its residual may rise for a while
        // on the way to an attracting orbit, so moderate growth is accepted
        let cand = cur.phi.combine(T::one() - s, &cur.image, s);
        let stagnating = match search.evaluate(cand) {
            Ok(next) if next.residual < T::lit(GROWTH) * best => {
                cur = next;
                s = (s * T::lit(1.5)).min(T::one());
                false
            }
            _ => {
                s = s / T::lit(2.0);
                s < min_s
            }
        };
        if cur.residual < T::lit(0.95) * best {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if (stagnating || stalled >= STALL) && cur.residual > tol {
            newton_steps += 1;
            if let Some(next) = search.newton(&cur)? {
                cur = next;
            }
            stalled = 0;
            s = s.max(min_s);
        }
        if cur.residual < best {
            best = cur.residual;
            best_phi = cur.phi.clone();
        }
        history.push(cur.residual);
    }
    if best < cur.residual {
        cur = search.evaluate(best_phi)?;
    }
    Ok(PeriodicOrbitResult {
        converged: cur.residual <= tol,
        segment: cur.phi,
        residual: cur.residual,
        iterations,
        newton_steps,
        history,
        renorm_r: r,
    })
}

/// Independent searches from several starting segments, run concurrently.
pub fn find_periodic_from_seeds<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    seeds: &[HistorySegment<T>],
    max_iters: usize,
    tol: T,
) -> Vec<Result<PeriodicOrbitResult<T>>> {
    seeds.par_iter().map(|phi0| find_periodic(p, cfg, phi0, max_iters, tol)).collect()
}

/// Indices of pairwise distinct converged orbits: a result counts as new when
/// it is farther than `separation` (renorm) from every orbit already kept.
pub fn distinct_orbits<T: Scalar>(results: &[PeriodicOrbitResult<T>], separation: T) -> Result<Vec<usize>> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, res) in results.iter().enumerate().filter(|(_, r)| r.converged) {
        let w = RenormWeights::new(res.renorm_r, res.segment.tau())?;
        let mut new = true;
        for &k in &kept {
            if renorm_distance(&res.segment, &results[k].segment, &w)? <= separation {
                new = false;
                break;
            }
        }
        if new {
            kept.push(i);
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicityReport<T> {
    /// `max |u(t) - u(t - omega)|` over `t` in `[omega, 2 omega]`.
    pub defect: T,
    /// Sup norm of the trajectory on `[-tau, 2 omega]`.
    pub magnitude: T,
    pub tolerance: T,
    pub passed: bool,
}

impl<T: Scalar> PeriodicityReport<T> {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["defect", "magnitude", "tolerance", "passed"])?;
        w.write_record([fmt17(self.defect), fmt17(self.magnitude), fmt17(self.tolerance), self.passed.to_string()])?;
        w.flush()?;
        Ok(())
    }
}

/// Solves two periods from `phi` and compares the second with the first.
/// Passes when the defect is at most `tol (1 + magnitude)`.
pub fn verify_periodicity<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    phi: &HistorySegment<T>,
    tol: T,
) -> Result<PeriodicityReport<T>> {
    let omega = period_of(p)?;
    let steps = cfg.steps_to(omega)?;
    let traj = solve(&p.with_initial(phi.clone())?, cfg, omega + omega)?;
    let mut defect = T::zero();
    for k in steps..=2 * steps {
        let t = T::count(k) * cfg.step;
        let d = traj.value(t)?.distance(traj.value(t - omega)?);
        defect = defect.max(d);
    }
    let magnitude = traj.sup_norm();
    Ok(PeriodicityReport { defect, magnitude, tolerance: tol, passed: defect <= tol * (T::one() + magnitude) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessReport<T> {
    /// `sup |u_t(phi)|` over `t <= horizon` and the sample.
    pub bound: T,
    pub per_segment: Vec<T>,
}

/// Long-horizon runs from each segment of `sample`. Blow-up (solver failure,
/// non-finite values, or a norm above `ceiling`) means the model violates the
/// boundedness hypothesis and is reported as such.
pub fn boundedness_probe<T: Scalar>(
    p: &FdeProblem<T>,
    cfg: &SolverConfig<T>,
    sample: &[HistorySegment<T>],
    horizon: T,
    ceiling: T,
) -> Result<BoundednessReport<T>> {
    if sample.is_empty() {
        return Err(LabError::Usage("boundedness probe needs at least one segment".into()));
    }
    if let Some(omega) = p.period() {
        if horizon < omega {
            return Err(LabError::Usage(format!("horizon {horizon} is shorter than the period {omega}")));
        }
    }
    if !(ceiling > T::zero()) {
        return Err(LabError::Usage("ceiling must be positive".into()));
    }
    cfg.steps_to(horizon)?;
    let per_segment = sample
        .par_iter()
        .map(|phi| {
            let problem = p.with_initial(phi.clone())?;
            match solve(&problem, cfg, horizon) {
                Ok(traj) => {
                    let norm = traj.sup_norm();
                    if !norm.is_finite() || norm > ceiling {
                        Err(LabError::HypothesisViolation(format!(
                            "trajectory norm {norm:e} exceeds the ceiling {ceiling:e}"
                        )))
                    } else {
                        Ok(norm)
                    }
                }
                Err(e @ LabError::Usage(_)) => Err(e),
                Err(e) => Err(LabError::HypothesisViolation(format!("solution blew up: {e}"))),
            }
        })
        .collect::<Result<Vec<T>>>()?;
    let bound = per_segment.iter().fold(T::zero(), |a, b| a.max(*b));
    Ok(BoundednessReport { bound, per_segment })
}
