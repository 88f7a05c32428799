use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::state_space::{HistorySegment, SpatialField, SpatialGrid};

/// Families of test segments. Uniform noise rarely reaches the extremes of
/// the weighted norm, so the sweeps mix in the adversarial shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentFamily<T> {
    /// Node values i.i.d. uniform on `[-1, 1]`.
    Uniform,
    /// Random field at `theta = -tau`, zero elsewhere.
    SpikeAtTail,
    /// One random field repeated at every node.
    Constant,
    /// `exp(-rate theta) c`: the weight cancels and every node attains the norm.
    ExponentiallyWeighted { rate: T },
    /// Uniform noise with `phi(0) = 0`.
    ZeroHead,
}

/// Layout and seed of randomly drawn segments.
#[derive(Debug, Clone)]
pub struct SampleSpec<T> {
    pub tau: T,
    pub intervals: usize,
    pub grid: Arc<SpatialGrid<T>>,
    pub components: usize,
    pub seed: u64,
}

impl<T: Scalar> SampleSpec<T> {
    pub fn new(tau: T, intervals: usize, grid: Arc<SpatialGrid<T>>, components: usize, seed: u64) -> Result<Self> {
        if !(tau > T::zero()) {
            return Err(LabError::Domain(format!("delay must be positive, got {tau}")));
        }
        if intervals == 0 || components == 0 {
            return Err(LabError::Usage("need at least one interval and one component".into()));
        }
        Ok(Self { tau, intervals, grid, components, seed })
    }

    pub fn sampler(&self) -> SegmentSampler<T> {
        SegmentSampler { spec: self.clone(), rng: ChaCha8Rng::seed_from_u64(self.seed) }
    }

    /// `count` segments: a tenth each of spikes, constants and weighted
    /// exponentials (rate `rate`), the rest uniform noise.
    pub fn draw(&self, count: usize, rate: T) -> Vec<HistorySegment<T>> {
        let mut sampler = self.sampler();
        let adversarial = count / 10;
        (0..count)
            .map(|i| {
                let family = match i {
                    i if i < adversarial => SegmentFamily::SpikeAtTail,
                    i if i < 2 * adversarial => SegmentFamily::Constant,
                    i if i < 3 * adversarial => SegmentFamily::ExponentiallyWeighted { rate },
                    _ => SegmentFamily::Uniform,
                };
                sampler.sample(family)
            })
            .collect()
    }
}

/// Deterministic segment generator (ChaCha8, reproducible across platforms).
#[derive(Debug, Clone)]
pub struct SegmentSampler<T> {
    spec: SampleSpec<T>,
    rng: ChaCha8Rng,
}

impl<T: Scalar> SegmentSampler<T> {
    fn random_field(&mut self) -> SpatialField<T> {
        let grid = self.spec.grid.clone();
        let rng = &mut self.rng;
        SpatialField::from_fn(grid, self.spec.components, |_, _| T::lit(rng.random_range(-1.0..=1.0)))
            .expect("uniform samples are finite")
    }

    pub fn sample(&mut self, family: SegmentFamily<T>) -> HistorySegment<T> {
        let n = self.spec.intervals;
        let zero = SpatialField::zeros(self.spec.grid.clone(), self.spec.components);
        let fields: Vec<SpatialField<T>> = match family {
            SegmentFamily::Uniform => (0..=n).map(|_| self.random_field()).collect(),
            SegmentFamily::SpikeAtTail => {
                let spike = self.random_field();
                std::iter::once(spike).chain((0..n).map(|_| zero.clone())).collect()
            }
            SegmentFamily::Constant => vec![self.random_field(); n + 1],
            SegmentFamily::ExponentiallyWeighted { rate } => {
                let c = self.random_field();
                let tau = self.spec.tau;
                (0..=n)
                    .map(|j| {
                        let theta = -tau * T::count(n - j) / T::count(n);
                        c.scaled((-rate * theta).exp())
                    })
                    .collect()
            }
            SegmentFamily::ZeroHead => {
                let mut fields: Vec<_> = (0..n).map(|_| self.random_field()).collect();
                fields.push(zero);
                fields
            }
        };
        HistorySegment::new(self.spec.tau, fields).expect("sampled segment is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64) -> SampleSpec<f64> {
        SampleSpec::new(1.0, 8, Arc::new(SpatialGrid::uniform(1.0, 3).unwrap()), 2, seed).unwrap()
    }

    #[test]
    fn draws_are_reproducible_and_seed_dependent() {
        assert_eq!(spec(7).draw(20, 1.0), spec(7).draw(20, 1.0));
        assert_ne!(spec(7).draw(20, 1.0), spec(8).draw(20, 1.0));
    }

    #[test]
    fn families_have_their_shapes() {
        let mut s = spec(1).sampler();
        let spike = s.sample(SegmentFamily::SpikeAtTail);
        assert!(spike.node(0).norm() > 0.0);
        assert!(spike.fields()[1..].iter().all(|f| f.norm() == 0.0));
        let c = s.sample(SegmentFamily::Constant);
        assert!(c.fields().iter().all(|f| f == c.head()));
        let z = s.sample(SegmentFamily::ZeroHead);
        assert_eq!(z.head().norm(), 0.0);
        let u = s.sample(SegmentFamily::Uniform);
        assert!(u.fields().iter().all(|f| f.norm() <= 1.0));
    }
}
