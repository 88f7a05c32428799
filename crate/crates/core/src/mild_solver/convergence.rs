use std::io::Write;

use crate::error::{LabError, Result};
use crate::scalar::{fmt17, Scalar};

use super::{solve, FdeProblem, SolverConfig};

/// One row of a step-refinement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow<T> {
    pub step: T,
    pub error: T,
    /// `log(e_prev / e) / log(h_prev / h)` against the previous row.
    pub observed_order: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable<T> {
    pub reference_step: T,
    pub rows: Vec<ConvergenceRow<T>>,
}

impl<T: Scalar> ConvergenceTable<T> {
    /// Smallest observed order across consecutive refinements.
    pub fn min_order(&self) -> Option<T> {
        self.rows
            .iter()
            .filter_map(|r| r.observed_order)
            .fold(None, |acc: Option<T>, o| Some(acc.map_or(o, |a| a.min(o))))
    }

    /// Writes `h,error,observed_order`; the first row leaves the order empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["h", "error", "observed_order"])?;
        for row in &self.rows {
            let order = row.observed_order.map(fmt17).unwrap_or_default();
            w.write_record([fmt17(row.step), fmt17(row.error), order])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Solves with each step in `steps` (descending) and measures the segment
/// sup-norm error of `u_{t_end}` against the finest step, which serves as the
/// reference. Errors are compared on the coarse theta nodes.
pub fn convergence_study<T: Scalar>(
    p: &FdeProblem<T>,
    base: &SolverConfig<T>,
    steps: &[T],
    t_end: T,
) -> Result<ConvergenceTable<T>> {
    if steps.len() < 3 {
        return Err(LabError::Usage(format!(
            "convergence study needs at least 3 steps, got {}",
            steps.len()
        )));
    }
    if steps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(LabError::Usage("steps must be strictly descending".into()));
    }
    let finest = *steps.last().expect("non-empty");
    let reference = solve(p, &SolverConfig { step: finest, ..*base }, t_end)?.segment(t_end)?;

    let mut rows: Vec<ConvergenceRow<T>> = Vec::with_capacity(steps.len() - 1);
    for &h in &steps[..steps.len() - 1] {
        let seg = solve(p, &SolverConfig { step: h, ..*base }, t_end)?.segment(t_end)?;
        let error = seg.fields().iter().enumerate().try_fold(T::zero(), |acc, (j, f)| {
            Ok::<_, LabError>(acc.max(f.distance(&reference.evaluate(seg.theta(j))?)))
        })?;
        let observed_order = rows.last().and_then(|prev| {
            let ratio = prev.error / error;
            (prev.error > T::zero() && error > T::zero()).then(|| ratio.ln() / (prev.step / h).ln())
        });
        rows.push(ConvergenceRow { step: h, error, observed_order });
    }
    Ok(ConvergenceTable { reference_step: finest, rows })
}
