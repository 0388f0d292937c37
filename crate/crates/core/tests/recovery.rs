use lowrank::data::{relative_error, synth_lowrank, SyntheticSpec};
use lowrank::{
    estimate_rank, lrisd, shrink, svd, truncated_nuclear_norm, truncation_pair, InnerSolver,
    KappaRule, LinearMap, OperatorKind, RankPolicy, SolverConfig, SveConfig,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn diag(values: &[f64], m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |i, j| if i == j { values[i] } else { 0.0 })
}

#[test]
fn shrink_soft_thresholds_a_diagonal() {
    let x = diag(&[5.0, 3.0, 1.0, 0.5], 4, 6);
    let y = shrink(&x, 1.5).unwrap();
    let expected = diag(&[3.5, 1.5, 0.0, 0.0], 4, 6);
    assert!((y - expected).amax() < 1e-12);
}

#[test]
fn truncated_norm_and_pair_split_the_spectrum() {
    let x = diag(&[6.0, 4.0, 2.0, 1.0], 5, 4);
    assert!((truncated_nuclear_norm(&x, 2).unwrap() - 3.0).abs() < 1e-12);
    let pair = truncation_pair(&x, 2).unwrap();
    assert_eq!(pair.rank(), 2);
    assert!((pair.trace_term(&x) - 10.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn svd_reconstructs_with_sorted_values(m in 1usize..9, n in 1usize..9, seed in 0u64..1000) {
        let x = DMatrix::from_fn(m, n, |i, j| (((i * 7 + j * 13) as u64 * (seed + 3)) % 19) as f64 - 9.0);
        let f = svd(&x).unwrap();
        prop_assert!(f.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((f.reconstruct() - &x).amax() <= 1e-10 * (1.0 + x.amax()));
    }

    #[test]
    fn shrink_lowers_every_singular_value(m in 2usize..8, n in 2usize..8, tau in 0.0f64..5.0, seed in 0u64..1000) {
        let x = DMatrix::from_fn(m, n, |i, j| ((i as f64 + 1.0) * (j as f64 + 2.0) + seed as f64).sin() * 4.0);
        let before = svd(&x).unwrap().s;
        let after = svd(&shrink(&x, tau).unwrap()).unwrap().s;
        for (a, b) in after.iter().zip(before.iter()) {
            prop_assert!((a - (b - tau).max(0.0)).abs() <= 1e-9 * (1.0 + b));
        }
    }
}

#[test]
fn rank_estimate_on_a_gapped_spectrum() {
    let s = [9.0, 8.5, 8.0, 0.3, 0.2, 0.1];
    assert_eq!(estimate_rank(&s, 1.0).unwrap().rank, 3);
}

fn instance(kind: OperatorKind, seed: u64) -> lowrank::data::SyntheticInstance {
    synth_lowrank(&SyntheticSpec::new(30, 26, 2, 0.7, 0.0, seed, kind)).unwrap()
}

#[test]
fn lrisd_is_deterministic() {
    let inst = instance(OperatorKind::PartialDct2D, 4);
    let policy = RankPolicy::Estimate(SveConfig::new(KappaRule::Explicit(1.0)));
    let cfg = SolverConfig::default();
    let a = lrisd(&inst.op, &inst.b, InnerSolver::Admm, policy, &cfg).unwrap();
    let b = lrisd(&inst.op, &inst.b, InnerSolver::Admm, policy, &cfg).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.stages, b.stages);
    assert_eq!(a.estimates, b.estimates);
}

#[test]
fn every_inner_solver_recovers_a_clean_instance() {
    let inst = instance(OperatorKind::SamplingMask, 8);
    let cfg = SolverConfig {
        inner_tol: 1e-6,
        ..SolverConfig::default()
    };
    for inner in [InnerSolver::Admm, InnerSolver::Admmap, InnerSolver::Apgl] {
        let out = lrisd(&inst.op, &inst.b, inner, RankPolicy::Fixed(2), &cfg).unwrap();
        let reer = relative_error(&out.x, &inst.truth).unwrap();
        assert!(reer < 5e-2, "{inner}: Reer {reer}");
    }
}

#[test]
fn single_precision_runs() {
    let inst = instance(OperatorKind::SamplingMask, 2);
    let LinearMap::SamplingMask(mask) = inst.op else {
        unreachable!()
    };
    let op = LinearMap::<f32>::SamplingMask(mask);
    let truth = inst.truth.map(|v| v as f32);
    let b = op.apply(&truth).unwrap();
    let out = lrisd(
        &op,
        &b,
        InnerSolver::Admm,
        RankPolicy::Fixed(2),
        &SolverConfig::default(),
    )
    .unwrap();
    assert!(relative_error(&out.x, &truth).unwrap() < 0.1);
}
