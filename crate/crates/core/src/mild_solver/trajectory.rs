use std::io::Write;

use crate::error::{LabError, Result};
use crate::scalar::{fmt17, integral_ratio, Scalar};
use crate::state_space::{HistorySegment, SegmentView, SpatialField};

/// Dense solution record on the uniform grid `-tau, -tau + h, ..., t_end`.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    tau: T,
    step: T,
    history: usize,
    fields: Vec<SpatialField<T>>,
    max_picard_iters: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub(crate) fn new(
        tau: T,
        step: T,
        history: usize,
        fields: Vec<SpatialField<T>>,
        max_picard_iters: usize,
    ) -> Self {
        Self { tau, step, history, fields, max_picard_iters }
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn step(&self) -> T {
        self.step
    }

    /// Number of steps on `[0, t_end]`.
    pub fn steps(&self) -> usize {
        self.fields.len() - 1 - self.history
    }

    pub fn end_time(&self) -> T {
        self.time(self.fields.len() - 1)
    }

    /// Time of storage node `k`; node `tau / h` is `t = 0`.
    pub fn time(&self, k: usize) -> T {
        if k >= self.history {
            T::count(k - self.history) * self.step
        } else {
            -T::count(self.history - k) * self.step
        }
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.fields.len()).map(move |k| self.time(k))
    }

    pub fn fields(&self) -> &[SpatialField<T>] {
        &self.fields
    }

    /// Largest number of fixed-point iterations any step needed.
    pub fn max_picard_iters(&self) -> usize {
        self.max_picard_iters
    }

    /// Storage index of grid time `t`; off-grid or out-of-range times are usage errors.
    pub fn index_of(&self, t: T) -> Result<usize> {
        let k = integral_ratio((t + self.tau) / self.step)
            .filter(|k| *k < self.fields.len())
            .ok_or_else(|| {
                LabError::Usage(format!(
                    "t = {t} is not a grid time in [-{}, {}]",
                    self.tau,
                    self.end_time()
                ))
            })?;
        Ok(k)
    }

    pub fn value(&self, t: T) -> Result<&SpatialField<T>> {
        Ok(&self.fields[self.index_of(t)?])
    }

    /// `u_t` as a borrowed view; `t` must be a grid time in `[0, t_end]`.
    pub fn view(&self, t: T) -> Result<SegmentView<'_, T>> {
        let k = self.index_of(t)?;
        if k < self.history {
            return Err(LabError::Usage(format!("segment u_t needs t >= 0, got {t}")));
        }
        Ok(self.view_at(k))
    }

    pub(crate) fn view_at(&self, k: usize) -> SegmentView<'_, T> {
        SegmentView::new(self.tau, &self.fields[k - self.history..k], &self.fields[k])
    }

    /// `u_t` as an owned segment.
    pub fn segment(&self, t: T) -> Result<HistorySegment<T>> {
        Ok(self.view(t)?.to_segment())
    }

    /// `sup_{t <= t_end} |u_t|`, i.e. the largest nodal sup norm on `[-tau, t_end]`.
    pub fn sup_norm(&self) -> T {
        self.fields.iter().fold(T::zero(), |acc, f| acc.max(f.norm()))
    }

    /// Writes `t,component,node,value` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "component", "node", "value"])?;
        for (k, field) in self.fields.iter().enumerate() {
            let t = fmt17(self.time(k));
            for i in 0..field.components() {
                for (j, v) in field.component(i).iter().enumerate() {
                    w.write_record([t.as_str(), &i.to_string(), &j.to_string(), &fmt17(*v)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
