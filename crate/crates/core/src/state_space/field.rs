use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;

/// Ordered spatial sample points on `[0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid<T> {
    nodes: Vec<T>,
}

impl<T: Scalar> SpatialGrid<T> {
    /// `count` equally spaced nodes on `[0, length]`. A single node sits at 0.
    pub fn uniform(length: T, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(LabError::InvalidField("grid needs at least one node".into()));
        }
        if count == 1 {
            return Ok(Self { nodes: vec![T::zero()] });
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(LabError::InvalidField(format!(
                "grid length must be positive and finite, got {length}"
            )));
        }
        let last = T::count(count - 1);
        let nodes = (0..count)
            .map(|j| {
                if j + 1 == count {
                    length
                } else {
                    length * T::count(j) / last
                }
            })
            .collect();
        Ok(Self { nodes })
    }

    /// A one-point grid, used for finite-dimensional (ODE-like) state spaces.
    pub fn point() -> Self {
        Self { nodes: vec![T::zero()] }
    }

    pub fn from_nodes(nodes: Vec<T>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(LabError::InvalidField("grid needs at least one node".into()));
        }
        if nodes[0] != T::zero() {
            return Err(LabError::InvalidField("first grid node must be 0".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidField(
                "grid nodes must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn length(&self) -> T {
        *self.nodes.last().expect("grid is non-empty")
    }
}

/// An element of the state space: `m` real components sampled on a spatial grid.
///
/// Values are stored component-major: `values[i * nodes + j]` is component `i`
/// at node `j`. Construction rejects non-finite values; the arithmetic helpers
/// do not re-check, use [`SpatialField::is_finite`] where it matters.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField<T> {
    grid: Arc<SpatialGrid<T>>,
    components: usize,
    values: Vec<T>,
}

impl<T: Scalar> SpatialField<T> {
    pub fn new(grid: Arc<SpatialGrid<T>>, components: usize, values: Vec<T>) -> Result<Self> {
        if components == 0 {
            return Err(LabError::InvalidField("at least one component required".into()));
        }
        if values.len() != components * grid.len() {
            return Err(LabError::Dimension(format!(
                "expected {} x {} values, got {}",
                components,
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvalidField(format!(
                "non-finite value at component {}, node {}",
                pos / grid.len(),
                pos % grid.len()
            )));
        }
        Ok(Self { grid, components, values })
    }

    pub fn zeros(grid: Arc<SpatialGrid<T>>, components: usize) -> Self {
        Self::constant(grid, components, T::zero())
    }

    pub fn constant(grid: Arc<SpatialGrid<T>>, components: usize, value: T) -> Self {
        assert!(components > 0, "at least one component required");
        let values = vec![value; components * grid.len()];
        Self { grid, components, values }
    }

    /// Builds a field from `f(component, x)`.
    pub fn from_fn(
        grid: Arc<SpatialGrid<T>>,
        components: usize,
        mut f: impl FnMut(usize, T) -> T,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(components * grid.len());
        for i in 0..components {
            for &x in grid.nodes() {
                values.push(f(i, x));
            }
        }
        Self::new(grid, components, values)
    }

    pub(crate) fn from_raw(grid: Arc<SpatialGrid<T>>, components: usize, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), components * grid.len());
        Self { grid, components, values }
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn node_count(&self) -> usize {
        self.grid.len()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, component: usize, node: usize) -> T {
        self.values[component * self.grid.len() + node]
    }

    pub fn component(&self, i: usize) -> &[T] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [T] {
        let n = self.grid.len();
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Same component count and the same spatial grid.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.components == other.components
            && (Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid)
    }

    /// Maximum absolute value over all components and nodes, unchecked.
    pub fn norm(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Sup-norm distance to `other`.
    ///
    /// # Panics
    /// If the shapes differ.
    pub fn distance(&self, other: &Self) -> T {
        self.assert_shape(other);
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }

    /// `self += a * other`.
    ///
    /// # Panics
    /// If the shapes differ.
    pub fn add_scaled(&mut self, a: T, other: &Self) {
        self.assert_shape(other);
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x = *x + a * *y;
        }
    }

    pub fn scale(&mut self, a: T) {
        for x in &mut self.values {
            *x = *x * a;
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self - other`.
    ///
    /// # Panics
    /// If the shapes differ.
    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(-T::one(), other);
        out
    }

    /// `self + other`.
    ///
    /// # Panics
    /// If the shapes differ.
    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(T::one(), other);
        out
    }

    /// `(1 - s) * self + s * other`.
    pub fn lerp(&self, other: &Self, s: T) -> Self {
        self.assert_shape(other);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a + s * (*b - *a))
            .collect();
        Self::from_raw(self.grid.clone(), self.components, values)
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self::from_raw(
            self.grid.clone(),
            self.components,
            self.values.iter().map(|v| f(*v)).collect(),
        )
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    fn assert_shape(&self, other: &Self) {
        assert!(
            self.same_shape(other),
            "field shape mismatch: {}x{} vs {}x{}",
            self.components,
            self.grid.len(),
            other.components,
            other.grid.len()
        );
    }
}

/// Sup norm over all components and nodes.
pub fn sup_norm<T: Scalar>(x: &SpatialField<T>) -> Result<T> {
    if !x.is_finite() {
        return Err(LabError::InvalidField("non-finite value in field".into()));
    }
    Ok(x.norm())
}
