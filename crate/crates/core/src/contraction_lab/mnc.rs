use crate::error::{LabError, Result};
use crate::scalar::Scalar;
use crate::state_space::{renorm_distance, HistorySegment, RenormWeights};

/// Two-sided surrogate for the Hausdorff measure of noncompactness of a
/// finite set. Finite sets are compact, so this only estimates how far the
/// set is from being covered by `ceil(1 / resolution)` balls.
#[derive(Debug, Clone, PartialEq)]
pub struct MncEstimate<T> {
    /// `diam / (2 n)`.
    pub lower: T,
    /// Largest radius of the greedy cover.
    pub upper: T,
    /// Indices of the segments that seeded each ball.
    pub centers: Vec<usize>,
}

/// Chebyshev radius of a cluster in the weighted sup norm: half the widest
/// weighted coordinate range.
fn chebyshev_radius<T: Scalar>(members: &[&HistorySegment<T>], w: &RenormWeights<T>) -> T {
    let first = members[0];
    let mut radius = T::zero();
    for (j, theta) in first.thetas().enumerate() {
        let weight = w.weight(theta).recip();
        let len = first.node(j).values().len();
        for c in 0..len {
            let (lo, hi) = members.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), m| {
                let v = m.node(j).values()[c];
                (lo.min(v), hi.max(v))
            });
            radius = radius.max((hi - lo) / T::lit(2.0) * weight);
        }
    }
    radius
}

/// Greedy farthest-point cover with `k = ceil(1 / resolution)` balls, each
/// re-centred at its Chebyshev center. Reported only: the surrogate is not a
/// certified bound on the true measure.
pub fn mnc_surrogate<T: Scalar>(
    segments: &[HistorySegment<T>],
    weights: &RenormWeights<T>,
    resolution: T,
) -> Result<MncEstimate<T>> {
    if segments.is_empty() {
        return Err(LabError::Usage("mnc surrogate needs at least one segment".into()));
    }
    if !(resolution > T::zero()) {
        return Err(LabError::Usage(format!("resolution must be positive, got {resolution}")));
    }
    let n = segments.len();
    let k = resolution.recip().ceil().to_usize().unwrap_or(n).clamp(1, n);
    let dist = |a: usize, b: usize| renorm_distance(&segments[a], &segments[b], weights);

    let mut diam = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            diam = diam.max(dist(i, j)?);
        }
    }

    let mut centers = vec![0];
    let mut nearest: Vec<(T, usize)> = (0..n).map(|i| Ok((dist(0, i)?, 0))).collect::<Result<_>>()?;
    while centers.len() < k {
        let (far, _) = nearest
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, (d, _))| if *d > best.1 { (i, *d) } else { best });
        let id = centers.len();
        centers.push(far);
        for (i, slot) in nearest.iter_mut().enumerate() {
            let d = dist(far, i)?;
            if d < slot.0 {
                *slot = (d, id);
            }
        }
    }

    let mut upper = T::zero();
    for id in 0..centers.len() {
        let members: Vec<_> = (0..n).filter(|&i| nearest[i].1 == id).map(|i| &segments[i]).collect();
        if !members.is_empty() {
            upper = upper.max(chebyshev_radius(&members, weights));
        }
    }
    Ok(MncEstimate { lower: diam / (T::lit(2.0) * T::count(n)), upper, centers })
}
