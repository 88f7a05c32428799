use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::state_space::{SpatialField, SpatialGrid};

use super::{check_time, modal_difference, Semigroup};

/// Diffusion `u_t = D u_xx` on `[0, length]` with zero-flux ends, diagonalized
/// by the cosine transform on a uniform vertex grid.
///
/// Mode `k` is `cos(k pi x / length)` sampled on the nodes. Its decay rate is
/// `d_i * sigma_k` with `sigma_k = (2 / dx)^2 sin^2(k pi dx / (2 length))`, the
/// grid symbol of `-d^2/dx^2`. That symbol agrees with `(k pi / length)^2` to
/// relative order `(k dx)^2` on the resolved modes `k < modes`, and it keeps
/// the discrete flow positive and constant-preserving, hence a sup-norm
/// contraction.
#[derive(Debug, Clone)]
pub struct SpectralNeumannSemigroup<T> {
    diffusivities: Vec<T>,
    length: T,
    modes: usize,
    grid: Arc<SpatialGrid<T>>,
    symbol: Vec<T>,
    // node j, mode k at [j * n + k]
    synthesis: Vec<T>,
    // mode k, node j at [k * n + j]
    analysis: Vec<T>,
}

impl<T: Scalar> SpectralNeumannSemigroup<T> {
    /// `nodes` must be at least `2 * modes`; pass `None` for the default `2 * modes + 1`.
    pub fn new(diffusivities: Vec<T>, length: T, modes: usize, nodes: Option<usize>) -> Result<Self> {
        if diffusivities.is_empty() {
            return Err(LabError::Usage("at least one diffusivity required".into()));
        }
        if let Some(d) = diffusivities.iter().find(|d| !(**d > T::zero()) || !d.is_finite()) {
            return Err(LabError::Domain(format!("diffusivities must be positive, got {d}")));
        }
        if modes == 0 {
            return Err(LabError::Usage("mode count must be at least 1".into()));
        }
        let n = nodes.unwrap_or(2 * modes + 1);
        if n < 2 * modes {
            return Err(LabError::Usage(format!(
                "node count {n} below twice the mode count {modes}"
            )));
        }
        let grid = Arc::new(SpatialGrid::uniform(length, n)?);
        let last = T::count(n - 1);
        let dx = length / last;
        let half_pi = T::FRAC_PI_2();
        let symbol = (0..n)
            .map(|k| {
                let s = (half_pi * T::count(k) / last).sin();
                let g = T::lit(2.0) / dx;
                g * g * s * s
            })
            .collect();
        let pi = T::PI();
        let cosine = |j: usize, k: usize| (pi * T::count((j * k) % (2 * (n - 1))) / last).cos();
        let mut synthesis = vec![T::zero(); n * n];
        let mut analysis = vec![T::zero(); n * n];
        let two_over = T::lit(2.0) / last;
        let half = T::lit(0.5);
        for j in 0..n {
            let wj = if j == 0 || j == n - 1 { half } else { T::one() };
            for k in 0..n {
                let c = cosine(j, k);
                synthesis[j * n + k] = c;
                let wk = if k == 0 || k == n - 1 { half } else { T::one() };
                analysis[k * n + j] = two_over * wj * wk * c;
            }
        }
        Ok(Self { diffusivities, length, modes, grid, symbol, synthesis, analysis })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.diffusivities.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn diffusivities(&self) -> &[T] {
        &self.diffusivities
    }

    /// Decay rate of mode `k` in component `i`.
    pub fn eigenvalue(&self, component: usize, k: usize) -> T {
        self.diffusivities[component] * self.symbol[k]
    }

    /// `d_i (k pi / length)^2`, the rate of the continuous Neumann problem.
    pub fn continuum_eigenvalue(&self, component: usize, k: usize) -> T {
        let w = T::PI() * T::count(k) / self.length;
        self.diffusivities[component] * w * w
    }

    /// Cosine coefficients of one component's nodal values.
    pub fn coefficients(&self, values: &[T]) -> Vec<T> {
        let n = self.grid.len();
        (0..n)
            .map(|k| {
                let row = &self.analysis[k * n..(k + 1) * n];
                row.iter().zip(values).map(|(a, v)| *a * *v).sum()
            })
            .collect()
    }

    pub fn zero_field(&self) -> SpatialField<T> {
        SpatialField::zeros(self.grid.clone(), self.components())
    }

    fn check_shape(&self, x: &SpatialField<T>) -> Result<()> {
        if x.components() != self.components() || x.grid().as_ref() != self.grid.as_ref() {
            return Err(LabError::Dimension(format!(
                "field is {}x{}, semigroup expects {}x{} on its own grid",
                x.components(),
                x.node_count(),
                self.components(),
                self.grid.len()
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> Semigroup<T> for SpectralNeumannSemigroup<T> {
    fn apply(&self, t: T, x: &SpatialField<T>) -> Result<SpatialField<T>> {
        check_time(t)?;
        self.check_shape(x)?;
        if t == T::zero() {
            return Ok(x.clone());
        }
        let n = self.grid.len();
        let mut out = x.clone();
        for i in 0..self.components() {
            let values = x.component(i);
            // Constants are invariant; splitting off values[0] keeps them bit-exact.
            let base = values[0];
            let shifted: Vec<T> = values.iter().map(|v| *v - base).collect();
            let mut coeffs = self.coefficients(&shifted);
            for (k, c) in coeffs.iter_mut().enumerate() {
                *c = *c * (-self.eigenvalue(i, k) * t).exp();
            }
            let dst = out.component_mut(i);
            for (j, d) in dst.iter_mut().enumerate() {
                let row = &self.synthesis[j * n..(j + 1) * n];
                let s: T = row.iter().zip(&coeffs).map(|(b, c)| *b * *c).sum();
                *d = base + s;
            }
        }
        Ok(out)
    }

    fn bound(&self) -> T {
        T::one()
    }

    fn is_contraction(&self) -> bool {
        true
    }

    fn compact_for_positive_t(&self) -> bool {
        self.symbol.iter().any(|s| *s > T::zero())
    }

    fn operator_norm(&self, t: T) -> Result<T> {
        check_time(t)?;
        let rates = self.modal_rates().expect("spectral model is diagonal");
        Ok(rates.iter().fold(T::zero(), |acc, mu| acc.max((-*mu * t).exp())))
    }

    fn modal_rates(&self) -> Option<Vec<T>> {
        let n = self.grid.len();
        Some(
            (0..self.components())
                .flat_map(|i| (0..n).map(move |k| (i, k)))
                .map(|(i, k)| self.eigenvalue(i, k))
                .collect(),
        )
    }

    fn shifted_difference_norm(&self, s1: T, s2: T, shift: T) -> Result<T> {
        check_time(s1)?;
        check_time(s2)?;
        Ok(modal_difference(&self.modal_rates().expect("diagonal"), s1, s2, shift))
    }

    fn slowest_decay_rate(&self) -> Option<T> {
        Some(T::zero())
    }

    fn accepts(&self, x: &SpatialField<T>) -> Result<()> {
        self.check_shape(x)
    }
}
