//! Numerical checks of the splitting `Q(t) = L(t) + Qbar(t)` of the solution
//! map: contraction of `L(t)` in the weighted norm, equicontinuity of
//! `Qbar(t)`, and a measure-of-noncompactness surrogate.

mod decomposition;
mod equicontinuity;
mod mnc;
mod sampling;

pub use decomposition::{
    decompose, decomposition_consistency, finite_set_contraction, l_op, l_op_with_branch,
    qbar_direct, verify_l_contraction, verify_l_contraction_sampled, verify_norm_equivalence, verify_norm_equivalence_sampled,
    write_decomposition_csv, write_finite_set_csv, write_norm_equivalence_csv, Decomposition, DecompositionReport, FiniteSetReport, HistoryBranch,
    NormEquivalenceReport,
};
pub use equicontinuity::{equicontinuity_report, write_equicontinuity_csv, ContinuityRegime, EquicontinuityReport};
pub use mnc::{mnc_surrogate, MncEstimate};
pub use sampling::{SampleSpec, SegmentFamily, SegmentSampler};
