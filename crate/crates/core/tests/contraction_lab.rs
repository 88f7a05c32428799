mod common;

use std::sync::Arc;

use fde_lab::contraction_lab::*;
use fde_lab::mild_solver::{FdeProblem, Nonlinearity, SolverConfig, ZeroForcing};
use fde_lab::semigroups::{MatrixSemigroup, Semigroup, SpectralNeumannSemigroup};
use fde_lab::state_space::{
    renorm, segment_sup_norm, HistorySegment, RenormWeights, SegmentView, SpatialField,
};
use fde_lab::LabError;
use proptest::prelude::*;

use common::scalar_field;

fn spectral() -> Arc<dyn Semigroup<f64>> {
    Arc::new(SpectralNeumannSemigroup::new(vec![0.1], 1.0, 8, None).unwrap())
}

fn spec(intervals: usize, seed: u64) -> SampleSpec<f64> {
    let s = SpectralNeumannSemigroup::<f64>::new(vec![0.1], 1.0, 8, None).unwrap();
    SampleSpec::new(1.0, intervals, s.grid().clone(), 1, seed).unwrap()
}

/// `u' = d u_xx + u(0) (1 - u(-tau))` on the spectral model.
fn logistic_problem(intervals: usize) -> FdeProblem<f64> {
    let s = spectral();
    let f: Arc<dyn Nonlinearity<f64>> = Arc::new(|_t: f64, u: &SegmentView<'_, f64>| {
        let head = u.head();
        let values = head.values().iter().zip(u.tail().values()).map(|(x, lag)| x * (1.0 - lag)).collect();
        SpatialField::new(head.grid().clone(), 1, values).unwrap()
    });
    let phi = spec(intervals, 0).sampler().sample(SegmentFamily::Uniform);
    FdeProblem::new(s, f, phi).unwrap()
}

#[test]
fn l_op_matches_closed_form_for_scalar_decay() {
    // A = -lambda: (L(t) phi)(theta) = exp(-(lambda + r)(t + theta)) phi(0) past the history
    let r = 0.5;
    let phi = HistorySegment::from_fn(1.0, 8, |th| scalar_field(1.0 + th * th)).unwrap();
    for (lambda, t) in [0.7, 0.0].iter().flat_map(|l| [0.25, 0.5, 1.0, 2.0].map(|t| (*l, t))) {
        let s: Arc<dyn Semigroup<f64>> = if lambda == 0.0 {
            Arc::new(MatrixSemigroup::zero(1))
        } else {
            Arc::new(MatrixSemigroup::new(1, &[-lambda]).unwrap())
        };
        let l = l_op(t, &phi, r, &s).unwrap();
        for (j, theta) in phi.thetas().enumerate() {
            let expected = if t + theta > 0.0 {
                (-(lambda + r) * (t + theta)).exp()
            } else {
                1.0 + (t + theta) * (t + theta)
            };
            let got = l.node(j).values()[0];
            assert!((got - expected).abs() < 1e-13, "t={t} theta={theta}: {got} vs {expected}");
        }
    }
}

#[test]
fn l_op_forgets_everything_but_the_head_after_one_delay() {
    let s = spectral();
    let mut sampler = spec(16, 3).sampler();
    let a = sampler.sample(SegmentFamily::Uniform);
    let b = sampler.sample(SegmentFamily::Uniform);
    let mut fields = b.fields().to_vec();
    *fields.last_mut().unwrap() = a.head().clone();
    let b = HistorySegment::new(1.0, fields).unwrap();
    for t in [1.0, 1.5, 3.0] {
        assert_eq!(l_op(t, &a, 0.5, &s).unwrap(), l_op(t, &b, 0.5, &s).unwrap());
    }
    assert_ne!(l_op(0.5, &a, 0.5, &s).unwrap(), l_op(0.5, &b, 0.5, &s).unwrap());
}

#[test]
fn contraction_sweep_passes_on_the_spectral_model() {
    let s = spectral();
    let samples = spec(16, 42).draw(100, 1.0);
    let reports = verify_l_contraction(&s, 1.0, &[0.25, 0.5, 1.0, 2.0], &samples, HistoryBranch::Exact).unwrap();
    for rep in &reports {
        assert!(rep.margin >= -1e-12, "{rep:?}");
        assert!(rep.max_l_ratio > 0.0);
    }
    // weighted exponentials sit on the bound exactly while t <= tau
    assert!((reports[0].max_l_ratio - reports[0].bound).abs() < 1e-12);
}

#[test]
fn off_by_one_history_branch_is_caught() {
    let s = spectral();
    let samples = spec(16, 42).draw(50, 1.0);
    let err = verify_l_contraction(&s, 1.0, &[0.25], &samples, HistoryBranch::OffByOneNode).unwrap_err();
    match err {
        LabError::PropertyFailure { witness_csv, .. } => {
            assert!(witness_csv.unwrap().starts_with("theta,component,node,value"));
        }
        other => panic!("unexpected {other:?}"),
    }
    let err = finite_set_contraction(&samples[15..30], 0.25, 1.0, &s, HistoryBranch::OffByOneNode);
    assert!(matches!(err, Err(LabError::PropertyFailure { .. })));
}

#[test]
fn zero_head_segments_vanish_after_one_delay() {
    let s = spectral();
    let mut sampler = spec(16, 8).sampler();
    let samples: Vec<_> = (0..20).map(|_| sampler.sample(SegmentFamily::ZeroHead)).collect();
    let reports = verify_l_contraction(&s, 1.0, &[1.5, 2.0], &samples, HistoryBranch::Exact).unwrap();
    assert!(reports.iter().all(|r| r.max_l_ratio == 0.0));
}

#[test]
fn repeated_set_has_zero_diameters() {
    let s = spectral();
    let phi = spec(16, 2).sampler().sample(SegmentFamily::Uniform);
    let rep = finite_set_contraction(&[phi.clone(), phi], 0.5, 1.0, &s, HistoryBranch::Exact).unwrap();
    assert_eq!((rep.diameter_before, rep.diameter_after), (0.0, 0.0));
}

#[test]
fn unforced_problem_has_zero_qbar_and_modulus() {
    let phi = spec(16, 6).sampler().sample(SegmentFamily::Uniform);
    let p = FdeProblem::new(spectral(), Arc::new(ZeroForcing), phi.clone()).unwrap();
    let cfg = SolverConfig::new(1.0 / 16.0);
    assert_eq!(segment_sup_norm(&qbar_direct(1.5, &p, &cfg, &phi).unwrap()), 0.0);
    let rep = equicontinuity_report(1.0, &p, &cfg, &[phi], 0.05).unwrap();
    assert_eq!((rep.k_bound, rep.measured_modulus), (0.0, 0.0));
    assert!(rep.passed);
}

#[test]
fn finite_set_diameter_contracts() {
    let s = spectral();
    let set = spec(16, 9).draw(12, 0.5);
    for t in [0.25, 1.0, 2.0] {
        let rep = finite_set_contraction(&set, t, 0.5, &s, HistoryBranch::Exact).unwrap();
        assert!(rep.diameter_after <= rep.bound * rep.diameter_before + 1e-12);
        assert!(rep.diameter_before > 0.0);
    }
    assert!(finite_set_contraction(&set[..1], 1.0, 0.5, &s, HistoryBranch::Exact).is_err());
}

#[test]
fn norm_equivalence_is_attained_by_spikes() {
    for r in [0.0, 0.5, 1.0, 2.0] {
        let samples = spec(16, 5).draw(100, r);
        let rep = verify_norm_equivalence(r, &samples).unwrap();
        assert_eq!(rep, verify_norm_equivalence_sampled(r, &spec(16, 5), 100).unwrap());
        assert!(rep.lower_margin >= -1e-12 && rep.upper_margin >= -1e-12);
        assert!(rep.lower_attainment_gap <= 1e-10, "{rep:?}");
    }
}

#[test]
fn decomposition_identity_holds_to_fixed_point_tolerance() {
    let p = logistic_problem(16);
    let cfg = SolverConfig::new(1.0 / 32.0).with_r(1.0);
    let samples = spec(16, 11).draw(5, 1.0);
    let reports = decomposition_consistency(&p, &cfg, &[0.5, 1.0, 2.0], &samples).unwrap();
    for rep in &reports {
        assert!(rep.consistency_residual.unwrap() <= 2.0 * cfg.picard_tol, "{rep:?}");
        assert!(rep.margin >= -1e-12);
    }
}

#[test]
fn qbar_vanishes_on_the_history_part() {
    let p = logistic_problem(16);
    let cfg = SolverConfig::new(1.0 / 16.0).with_r(0.5);
    let phi = spec(16, 1).sampler().sample(SegmentFamily::Uniform);
    let q = qbar_direct(0.5, &p, &cfg, &phi).unwrap();
    for (j, theta) in q.thetas().enumerate() {
        if theta <= -0.5 {
            assert_eq!(q.node(j).norm(), 0.0);
        }
    }
    assert!(q.head().norm() > 0.0);
    assert_eq!(qbar_direct(0.5, &p, &cfg, &phi).unwrap(), decompose(0.5, &p, &cfg, &phi).unwrap().qbar);
}

#[test]
fn equicontinuity_bound_holds_in_both_regimes() {
    let p = logistic_problem(32);
    let cfg = SolverConfig::new(1.0 / 32.0).with_r(1.0);
    let set = spec(32, 4).draw(6, 1.0);
    for (t, regime) in [(0.5, ContinuityRegime::WithinDelay), (2.0, ContinuityRegime::BeyondDelay)] {
        let rep = equicontinuity_report(t, &p, &cfg, &set, 0.05).unwrap();
        assert_eq!(rep.regime, regime);
        assert!(rep.passed, "{rep:?}");
        assert!(rep.delta > 0.0 && rep.delta < 0.05);
        assert!(rep.measured_modulus > 0.0);
    }
}

#[test]
fn equicontinuity_rejects_identity_flow() {
    let p = common::linear_delay_problem(|_| 1.0, 8);
    let cfg = SolverConfig::new(0.125);
    let set = vec![p.initial().clone()];
    assert!(matches!(
        equicontinuity_report(1.0, &p, &cfg, &set, 0.05),
        Err(LabError::UnsupportedModel(_))
    ));
}

#[test]
fn mnc_surrogate_brackets_are_ordered_for_random_sets() {
    let set = spec(8, 2).draw(20, 0.0);
    let w = RenormWeights::new(1.0, 1.0).unwrap();
    let est = mnc_surrogate(&set, &w, 0.25).unwrap();
    assert_eq!(est.centers.len(), 4);
    assert!(est.lower > 0.0 && est.upper > 0.0);
}

fn segment_strategy() -> impl Strategy<Value = HistorySegment<f64>> {
    proptest::collection::vec(-1.0..1.0f64, 9 * 17).prop_map(|v| {
        let s = SpectralNeumannSemigroup::<f64>::new(vec![0.1], 1.0, 8, None).unwrap();
        let grid = s.grid().clone();
        let fields = v
            .chunks(17)
            .map(|c| SpatialField::new(grid.clone(), 1, c.to_vec()).unwrap())
            .collect();
        HistorySegment::new(1.0, fields).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn l_is_a_semigroup_on_grid_times(phi in segment_strategy(), a in 0usize..12, b in 0usize..12, r in 0.0..2.0f64) {
        let s = spectral();
        let h = phi.step();
        let (ta, tb) = (a as f64 * h, b as f64 * h);
        let two_step = l_op(ta, &l_op(tb, &phi, r, &s).unwrap(), r, &s).unwrap();
        let one_step = l_op(ta + tb, &phi, r, &s).unwrap();
        prop_assert!(segment_sup_norm(&two_step.minus(&one_step)) < 1e-12);
    }

    #[test]
    fn l_is_linear(phi in segment_strategy(), psi in segment_strategy(), c in -3.0..3.0f64, t in 0.0..3.0f64) {
        let s = spectral();
        let lhs = l_op(t, &phi.combine(1.0, &psi, c), 0.7, &s).unwrap();
        let rhs = l_op(t, &phi, 0.7, &s).unwrap().combine(1.0, &l_op(t, &psi, 0.7, &s).unwrap(), c);
        prop_assert!(segment_sup_norm(&lhs.minus(&rhs)) < 1e-12);
    }

    #[test]
    fn l_contracts_every_segment(phi in segment_strategy(), k in 0usize..30, r in 0.0..3.0f64) {
        // grid times only: off-grid shifts interpolate, and the nodal norm may then grow by exp(r h)
        let s = spectral();
        let t = k as f64 * phi.step();
        let w = RenormWeights::new(r, 1.0).unwrap();
        let after = renorm(&l_op(t, &phi, r, &s).unwrap(), &w).unwrap();
        prop_assert!(after <= (-r * t).exp() * renorm(&phi, &w).unwrap() + 1e-12);
    }

    #[test]
    fn l_at_zero_is_the_identity(phi in segment_strategy(), r in 0.0..3.0f64) {
        prop_assert_eq!(l_op(0.0, &phi, r, &spectral()).unwrap(), phi);
    }
}
