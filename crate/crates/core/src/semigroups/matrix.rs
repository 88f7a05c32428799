use std::marker::PhantomData;

use nalgebra::DMatrix;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::state_space::SpatialField;

use super::{check_time, log_time_grid, modal_difference, Semigroup};

/// Spectral abscissa treated as zero.
const ABSCISSA_TOL: f64 = 1e-12;
/// Horizon used to bound flows that are stable but not exponentially stable.
const NEUTRAL_HORIZON: f64 = 1e3;

/// `T(t) = exp(t A)` for a dense generator acting on the component vector at
/// every spatial node. Exponentials are evaluated in `f64` (Pade scaling and
/// squaring) regardless of the field scalar type.
#[derive(Debug, Clone)]
pub struct MatrixSemigroup<T> {
    generator: DMatrix<f64>,
    bound: f64,
    slowest: Option<f64>,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> MatrixSemigroup<T> {
    /// Generator given row-major as `dim * dim` entries.
    ///
    /// Rejects generators whose flow is unbounded: spectrum reaching into the
    /// open right half-plane, or polynomial growth on the imaginary axis.
    pub fn new(dim: usize, row_major: &[T]) -> Result<Self> {
        if dim == 0 || row_major.len() != dim * dim {
            return Err(LabError::Dimension(format!(
                "generator needs {dim}x{dim} = {} entries, got {}",
                dim * dim,
                row_major.len()
            )));
        }
        let data: Vec<f64> = row_major.iter().map(|v| v.to_f64_lossy()).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidField("generator has non-finite entries".into()));
        }
        let generator = DMatrix::from_row_slice(dim, dim, &data);
        let abscissa = generator
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if abscissa > ABSCISSA_TOL {
            return Err(LabError::UnboundedModel(format!(
                "generator has spectral abscissa {abscissa:e} > 0"
            )));
        }
        let slowest = (abscissa < -ABSCISSA_TOL).then_some(-abscissa);
        let mut model = Self { generator, bound: 1.0, slowest, _scalar: PhantomData };
        model.bound = model.sweep_bound()?;
        Ok(model)
    }

    /// `A = 0`: every `T(t)` is the identity.
    pub fn zero(dim: usize) -> Self {
        Self {
            generator: DMatrix::zeros(dim, dim),
            bound: 1.0,
            slowest: None,
            _scalar: PhantomData,
        }
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    /// `exp(t A)` in `f64`.
    pub fn exponential(&self, t: f64) -> DMatrix<f64> {
        (&self.generator * t).exp()
    }

    fn sweep_bound(&self) -> Result<f64> {
        let horizon = match self.slowest {
            Some(sigma) => 12.0 * std::f64::consts::LN_10 / sigma,
            None => NEUTRAL_HORIZON,
        };
        let grid = log_time_grid(horizon, 400);
        let norms: Vec<f64> = grid.iter().map(|t| inf_norm(&self.exponential(*t))).collect();
        if self.slowest.is_none() {
            let early = norms[..norms.len() / 2].iter().cloned().fold(0.0, f64::max);
            let late = *norms.last().expect("grid is non-empty");
            if late > early * (1.0 + 1e-6) {
                return Err(LabError::UnboundedModel(format!(
                    "flow norm still growing at t = {horizon} ({late:e})"
                )));
            }
        }
        let (peak, &best) = norms
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is non-empty");
        // refine between the neighbours of the coarse maximum
        let lo = grid[peak.saturating_sub(1)];
        let hi = grid[(peak + 1).min(grid.len() - 1)];
        let refined = (0..=200)
            .map(|i| lo + (hi - lo) * i as f64 / 200.0)
            .map(|t| inf_norm(&self.exponential(t)))
            .fold(best, f64::max);
        Ok(refined.max(1.0))
    }

    fn check_shape(&self, x: &SpatialField<T>) -> Result<()> {
        if x.components() != self.dim() {
            return Err(LabError::Dimension(format!(
                "field has {} components, generator is {}x{}",
                x.components(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Induced sup norm: maximum absolute row sum.
fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

impl<T: Scalar> Semigroup<T> for MatrixSemigroup<T> {
    fn apply(&self, t: T, x: &SpatialField<T>) -> Result<SpatialField<T>> {
        check_time(t)?;
        self.check_shape(x)?;
        if t == T::zero() {
            return Ok(x.clone());
        }
        let e = self.exponential(t.to_f64_lossy());
        let dim = self.dim();
        let nodes = x.node_count();
        let mut out = x.clone();
        let values = out.values_mut();
        for j in 0..nodes {
            for i in 0..dim {
                let s: f64 = (0..dim).map(|k| e[(i, k)] * x.get(k, j).to_f64_lossy()).sum();
                values[i * nodes + j] = T::lit(s);
            }
        }
        Ok(out)
    }

    fn bound(&self) -> T {
        T::lit(self.bound)
    }

    fn is_contraction(&self) -> bool {
        self.bound <= 1.0 + 1e-12
    }

    fn compact_for_positive_t(&self) -> bool {
        self.generator.iter().any(|v| *v != 0.0)
    }

    fn operator_norm(&self, t: T) -> Result<T> {
        check_time(t)?;
        Ok(T::lit(inf_norm(&self.exponential(t.to_f64_lossy()))))
    }

    fn modal_rates(&self) -> Option<Vec<T>> {
        let n = self.dim();
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || self.generator[(i, j)] == 0.0));
        diagonal.then(|| (0..n).map(|i| T::lit(-self.generator[(i, i)])).collect())
    }

    fn shifted_difference_norm(&self, s1: T, s2: T, shift: T) -> Result<T> {
        check_time(s1)?;
        check_time(s2)?;
        if let Some(rates) = self.modal_rates() {
            return Ok(modal_difference(&rates, s1, s2, shift));
        }
        let (a, b, r) = (s1.to_f64_lossy(), s2.to_f64_lossy(), shift.to_f64_lossy());
        let diff = self.exponential(a) * (-r * a).exp() - self.exponential(b) * (-r * b).exp();
        Ok(T::lit(inf_norm(&diff)))
    }

    fn slowest_decay_rate(&self) -> Option<T> {
        self.slowest.map(T::lit)
    }

    fn accepts(&self, x: &SpatialField<T>) -> Result<()> {
        self.check_shape(x)
    }
}
