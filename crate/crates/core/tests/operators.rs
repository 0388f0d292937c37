use lowrank::operators::{read_keep_file, read_mask_file, write_keep_file, write_mask_file};
use lowrank::{Error, LinearMap, SamplingMask};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn operator(kind: bool, m: usize, n: usize, sr: f64, seed: u64) -> LinearMap<f64> {
    if kind {
        LinearMap::random_dct(m, n, sr, seed, false).unwrap()
    } else {
        LinearMap::random_mask(m, n, sr, seed).unwrap()
    }
}

fn matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |i, j| {
        (((i * 31 + j * 17) as u64 ^ seed) % 23) as f64 - 11.0 + 0.1 * j as f64
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_and_tight_frame(kind in any::<bool>(), m in 1usize..12, n in 1usize..12, sr in 0.05f64..1.0, seed in 0u64..1000) {
        let op = operator(kind, m, n, sr, seed);
        let x = matrix(m, n, seed);
        let y = DVector::from_fn(op.len(), |i, _| (i as f64 * 0.7 + seed as f64).sin());
        let lhs = op.apply(&x).unwrap().dot(&y);
        let rhs = x.dot(&op.adjoint(&y).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + x.norm() * y.norm()));
        let back = op.apply(&op.adjoint(&y).unwrap()).unwrap();
        prop_assert!((back - &y).amax() <= 1e-12 * (1.0 + y.amax()));
    }

    #[test]
    fn ball_projection_is_feasible_and_idempotent(kind in any::<bool>(), m in 2usize..10, n in 2usize..10, delta in 0.0f64..5.0, seed in 0u64..500) {
        let op = operator(kind, m, n, 0.5, seed);
        let b = op.apply(&matrix(m, n, seed + 1)).unwrap();
        let p = op.project_ball(&matrix(m, n, seed), &b, delta).unwrap();
        let dist = (op.apply(&p).unwrap() - &b).norm();
        prop_assert!(dist <= delta + 1e-10 * (1.0 + b.norm()));
        let again = op.project_ball(&p, &b, delta).unwrap();
        prop_assert!((again - &p).amax() <= 1e-10 * (1.0 + p.amax()));
    }

    #[test]
    fn index_files_round_trip(kind in any::<bool>(), m in 1usize..9, n in 1usize..9, sr in 0.05f64..1.0, seed in 0u64..500) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.txt");
        let op = operator(kind, m, n, sr, seed);
        let back = match &op {
            LinearMap::SamplingMask(mask) => {
                write_mask_file(&path, mask).unwrap();
                LinearMap::SamplingMask(read_mask_file(&path).unwrap())
            }
            LinearMap::PartialDct2D(dct) => {
                write_keep_file(&path, dct).unwrap();
                LinearMap::PartialDct2D(read_keep_file(&path).unwrap())
            }
        };
        let x = matrix(m, n, seed);
        prop_assert_eq!(op.apply(&x).unwrap(), back.apply(&x).unwrap());
    }
}

#[test]
fn malformed_index_files_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mask.txt");
    for body in [
        "",
        "2 2\n",
        "2 2 2\n0 0\n",
        "2 2 1\n0 x\n",
        "2 2 1\n5 0\n",
        "2 2 2\n0 1\n0 1\n",
        "2 2 1\n0 0 0\n",
    ] {
        std::fs::write(&path, body).unwrap();
        match read_mask_file(&path) {
            Err(Error::Format { path: p, .. }) => assert_eq!(p, path),
            other => panic!("{body:?}: expected a format error, got {other:?}"),
        }
    }
    std::fs::write(&path, "2 2 1\n4\n").unwrap();
    assert!(matches!(
        read_keep_file::<f64>(&path),
        Err(Error::Format { .. })
    ));
    assert!(matches!(
        read_mask_file(dir.path().join("absent.txt")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn full_mask_is_identity() {
    let op = LinearMap::<f64>::SamplingMask(SamplingMask::full(3, 5).unwrap());
    let x = matrix(3, 5, 9);
    assert_eq!(op.data_matrix(&op.apply(&x).unwrap()).unwrap(), x);
    assert!(op.inverse_identity_check(0.5, &x).unwrap() <= 1e-12 * x.norm());
}
