use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::scalar::{fmt17, Scalar};

use super::field::{SpatialField, SpatialGrid};

/// A history segment: a continuous map `[-tau, 0] -> X`, stored on a uniform
/// theta grid and evaluated by piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment<T> {
    tau: T,
    fields: Vec<SpatialField<T>>,
}

impl<T: Scalar> HistorySegment<T> {
    /// `fields[j]` is the value at `theta_j = -tau * (n - j) / n` with `n = fields.len() - 1`.
    pub fn new(tau: T, fields: Vec<SpatialField<T>>) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(LabError::Domain(format!("delay must be positive, got {tau}")));
        }
        if fields.len() < 2 {
            return Err(LabError::InvalidField(
                "a segment needs at least the two endpoint nodes".into(),
            ));
        }
        let first = &fields[0];
        if let Some(j) = fields.iter().position(|f| !f.same_shape(first)) {
            return Err(LabError::Dimension(format!(
                "segment node {j} has a different shape from node 0"
            )));
        }
        if let Some(j) = fields.iter().position(|f| !f.is_finite()) {
            return Err(LabError::InvalidField(format!("non-finite value at segment node {j}")));
        }
        Ok(Self { tau, fields })
    }

    /// Samples `f(theta)` on `intervals + 1` uniform nodes of `[-tau, 0]`.
    pub fn from_fn(
        tau: T,
        intervals: usize,
        mut f: impl FnMut(T) -> SpatialField<T>,
    ) -> Result<Self> {
        if intervals == 0 {
            return Err(LabError::Usage("segment needs at least one interval".into()));
        }
        let fields = (0..=intervals).map(|j| f(theta_node(tau, intervals, j))).collect();
        Self::new(tau, fields)
    }

    pub fn constant(tau: T, intervals: usize, value: &SpatialField<T>) -> Result<Self> {
        Self::from_fn(tau, intervals, |_| value.clone())
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn intervals(&self) -> usize {
        self.fields.len() - 1
    }

    /// Theta spacing `tau / intervals`.
    pub fn step(&self) -> T {
        self.tau / T::count(self.intervals())
    }

    pub fn theta(&self, j: usize) -> T {
        theta_node(self.tau, self.intervals(), j)
    }

    pub fn thetas(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.fields.len()).map(move |j| self.theta(j))
    }

    pub fn fields(&self) -> &[SpatialField<T>] {
        &self.fields
    }

    pub fn node(&self, j: usize) -> &SpatialField<T> {
        &self.fields[j]
    }

    /// The value at theta = 0.
    pub fn head(&self) -> &SpatialField<T> {
        self.fields.last().expect("segment is non-empty")
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        self.fields[0].grid()
    }

    pub fn components(&self) -> usize {
        self.fields[0].components()
    }

    pub fn view(&self) -> SegmentView<'_, T> {
        let n = self.intervals();
        SegmentView { tau: self.tau, body: &self.fields[..n], head: &self.fields[n] }
    }

    pub fn evaluate(&self, theta: T) -> Result<SpatialField<T>> {
        self.view().evaluate(theta)
    }

    /// Same theta grid, same field shape.
    pub fn same_layout(&self, other: &Self) -> bool {
        self.intervals() == other.intervals()
            && (self.tau - other.tau).abs() <= T::epsilon() * T::lit(4.0) * self.tau
            && self.fields[0].same_shape(&other.fields[0])
    }

    /// Node-wise combination `a * self + b * other`.
    ///
    /// # Panics
    /// If the layouts differ.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        assert!(self.same_layout(other), "segment layout mismatch");
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(x, y)| {
                let mut out = x.scaled(a);
                out.add_scaled(b, y);
                out
            })
            .collect();
        Self { tau: self.tau, fields }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.combine(T::one(), other, -T::one())
    }

    pub fn scaled(&self, a: T) -> Self {
        Self { tau: self.tau, fields: self.fields.iter().map(|f| f.scaled(a)).collect() }
    }

    pub fn map_fields(&self, f: impl FnMut(&SpatialField<T>) -> SpatialField<T>) -> Self {
        Self { tau: self.tau, fields: self.fields.iter().map(f).collect() }
    }

    /// Resamples onto `intervals + 1` uniform nodes by linear interpolation.
    pub fn resample(&self, intervals: usize) -> Result<Self> {
        if intervals == self.intervals() {
            return Ok(self.clone());
        }
        Self::from_fn(self.tau, intervals, |theta| {
            self.evaluate(theta).expect("resample nodes lie in [-tau, 0]")
        })
    }

    /// Flattened values, node-major.
    pub fn to_vec(&self) -> Vec<T> {
        self.fields.iter().flat_map(|f| f.values().iter().copied()).collect()
    }

    /// Inverse of [`HistorySegment::to_vec`] on this segment's layout.
    pub fn with_values(&self, values: &[T]) -> Result<Self> {
        let per = self.fields[0].values().len();
        if values.len() != per * self.fields.len() {
            return Err(LabError::Dimension(format!(
                "expected {} values, got {}",
                per * self.fields.len(),
                values.len()
            )));
        }
        let fields = values
            .chunks(per)
            .map(|chunk| {
                SpatialField::new(self.grid().clone(), self.components(), chunk.to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.tau, fields)
    }

    /// Writes `theta,component,node,value` rows, one per sample.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["theta", "component", "node", "value"])?;
        for (j, field) in self.fields.iter().enumerate() {
            let theta = fmt17(self.theta(j));
            for i in 0..field.components() {
                for (k, v) in field.component(i).iter().enumerate() {
                    w.write_record([theta.as_str(), &i.to_string(), &k.to_string(), &fmt17(*v)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`HistorySegment::write_csv`]; the spatial
    /// grid is supplied by the caller since the file only stores node indices.
    pub fn read_csv<R: Read>(reader: R, grid: Arc<SpatialGrid<T>>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut thetas: Vec<f64> = Vec::new();
        let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != 4 {
                return Err(LabError::Io(format!("expected 4 columns, got {}", record.len())));
            }
            let parse = |i: usize| -> Result<f64> {
                record[i].trim().parse::<f64>().map_err(|e| LabError::Io(format!("{e}")))
            };
            let theta = parse(0)?;
            if thetas.last() != Some(&theta) {
                thetas.push(theta);
            }
            let comp = parse(1)? as usize;
            let node = parse(2)? as usize;
            rows.push((thetas.len() - 1, comp, node, parse(3)?));
        }
        if thetas.len() < 2 {
            return Err(LabError::Io("segment CSV needs at least two theta nodes".into()));
        }
        let components = rows.iter().map(|r| r.1).max().unwrap_or(0) + 1;
        let n = grid.len();
        let mut values = vec![vec![T::zero(); components * n]; thetas.len()];
        let mut seen = 0usize;
        for (j, i, k, v) in rows {
            if k >= n {
                return Err(LabError::Dimension(format!("node index {k} outside grid of {n}")));
            }
            values[j][i * n + k] = T::lit(v);
            seen += 1;
        }
        if seen != thetas.len() * components * n {
            return Err(LabError::Io("segment CSV is missing samples".into()));
        }
        let tau = T::lit(-thetas[0]);
        let fields = values
            .into_iter()
            .map(|v| SpatialField::new(grid.clone(), components, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tau, fields)
    }
}

/// Borrowed history segment: the body nodes `theta_0 .. theta_{n-1}` and a
/// separately supplied head at theta = 0.
///
/// The solver uses this to evaluate the delayed argument against trajectory
/// storage while the head is still being iterated on.
#[derive(Debug, Clone, Copy)]
pub struct SegmentView<'a, T> {
    tau: T,
    body: &'a [SpatialField<T>],
    head: &'a SpatialField<T>,
}

impl<'a, T: Scalar> SegmentView<'a, T> {
    pub(crate) fn new(tau: T, body: &'a [SpatialField<T>], head: &'a SpatialField<T>) -> Self {
        debug_assert!(!body.is_empty());
        Self { tau, body, head }
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn intervals(&self) -> usize {
        self.body.len()
    }

    pub fn step(&self) -> T {
        self.tau / T::count(self.intervals())
    }

    pub fn theta(&self, j: usize) -> T {
        theta_node(self.tau, self.intervals(), j)
    }

    pub fn node(&self, j: usize) -> &'a SpatialField<T> {
        if j == self.body.len() {
            self.head
        } else {
            &self.body[j]
        }
    }

    /// `phi(0)`.
    pub fn head(&self) -> &'a SpatialField<T> {
        self.head
    }

    /// `phi(-tau)`.
    pub fn tail(&self) -> &'a SpatialField<T> {
        &self.body[0]
    }

    /// Piecewise-linear value at `theta`; exact at nodes.
    pub fn evaluate(&self, theta: T) -> Result<SpatialField<T>> {
        let n = self.intervals();
        let slack = T::epsilon() * T::lit(64.0) * self.tau;
        if !(theta >= -self.tau - slack && theta <= slack) {
            return Err(LabError::Domain(format!(
                "theta = {theta} outside [-{}, 0]",
                self.tau
            )));
        }
        let pos = ((theta + self.tau) / self.step()).max(T::zero()).min(T::count(n));
        let nearest = pos.round();
        if (pos - nearest).abs() <= T::epsilon() * T::lit(64.0) * T::count(n).max(T::one()) {
            let j = nearest.to_usize().expect("index in range");
            return Ok(self.node(j).clone());
        }
        let j = pos.floor().to_usize().expect("index in range").min(n - 1);
        let frac = pos - T::count(j);
        Ok(self.node(j).lerp(self.node(j + 1), frac))
    }

    pub fn to_segment(&self) -> HistorySegment<T> {
        let mut fields: Vec<_> = self.body.to_vec();
        fields.push(self.head.clone());
        HistorySegment { tau: self.tau, fields }
    }
}

pub(crate) fn theta_node<T: Scalar>(tau: T, intervals: usize, j: usize) -> T {
    -tau * T::count(intervals - j) / T::count(intervals)
}
