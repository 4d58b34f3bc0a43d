mod common;

use common::{linear_operator, linear_snapshots, orthogonal, rotation_snapshots};
use csdmd::dmd::{advance_modes, compressed_dmd, exact_dmd, project_dmd_result, SnapshotPair};
use csdmd::linalg::{alignment, svd_econ, vec_norm, Matrix};
use csdmd::pipelines::{dmd_operator, match_eigen, match_eigenvalues, random_unitary};
use csdmd::sensing::{make_measurement, MeasurementKind, MeasurementMatrix};
use csdmd::systems::{generate_fourier_lti, FourierLtiSystem};
use csdmd::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn sorted_by_angle(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| b.im.partial_cmp(&a.im).unwrap());
    v
}

#[test]
fn rotation_eigenvalues() {
    let data = rotation_snapshots(0.3, 10);
    let res = exact_dmd(&data, 1e-10).unwrap();
    let got = sorted_by_angle(res.lambdas.clone());
    let expect = [Complex64::from_polar(1.0, 0.3), Complex64::from_polar(1.0, -0.3)];
    for (g, e) in got.iter().zip(&expect) {
        assert!((g - e).norm() < 1e-10, "{g} vs {e}");
    }
    // continuous-time frequencies on the principal branch
    for w in &res.omegas {
        assert!(w.re.abs() < 1e-10 && (w.im.abs() - 0.3).abs() < 1e-10);
    }
}

#[test]
fn static_data_has_unit_eigenvalue() {
    let x0: Vec<f64> = vec![1.0, -2.0, 0.5, 3.0];
    let seq = Matrix::from_columns(4, &vec![x0.clone(); 6]);
    let data = SnapshotPair::from_sequence(&seq, 0.1, None).unwrap();
    let res = exact_dmd(&data, 1e-10).unwrap();
    assert_eq!(res.rank, 1);
    assert!((res.lambdas[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    let x0c: Vec<Complex64> = x0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    assert!(alignment(res.mode(0), &x0c) > 1.0 - 1e-12);
}

#[test]
fn planted_fourier_eigenvalues_are_recovered() {
    let sys = FourierLtiSystem::<f64>::random((32, 32), 4, 0.01, 80, 2).unwrap();
    let (data, truth) = generate_fourier_lti(&sys).unwrap();
    let res = exact_dmd(&data, 1e-10).unwrap();
    assert_eq!(res.rank, 8);
    let m = match_eigenvalues(&truth.lambdas, &res.lambdas, None);
    assert!(m.unmatched_a.is_empty() && m.unmatched_b.is_empty());
    assert!(m.max_abs_diff().unwrap() < 1e-8);
    for p in &m.pairs {
        assert!(alignment(truth.modes.col(p.a), res.mode(p.b)) > 1.0 - 1e-8);
    }
}

#[test]
fn identity_compression_matches_exact() {
    let (a, _) = linear_operator(10, 4);
    let data = linear_snapshots(&a, 25, 5);
    let exact = exact_dmd(&data, 1e-10).unwrap();
    let comp = compressed_dmd(&data, &MeasurementMatrix::identity(10), 1e-10).unwrap();
    let m = match_eigen(&exact, &comp);
    assert!(m.max_abs_diff().unwrap() < 1e-10);
    for p in &m.pairs {
        assert!(alignment(exact.mode(p.a), comp.mode(p.b)) > 1.0 - 1e-10);
    }
}

#[test]
fn gaussian_compression_of_planted_system() {
    let sys = FourierLtiSystem::<f64>::random((32, 32), 5, 0.01, 100, 7).unwrap();
    let (data, _) = generate_fourier_lti(&sys).unwrap();
    let exact = exact_dmd(&data, 1e-10).unwrap();
    let c = make_measurement::<f64>(MeasurementKind::Gaussian, 15, 1024, 1).unwrap();
    let comp = compressed_dmd(&data, &c, 1e-10).unwrap();
    let m = match_eigen(&exact, &comp);
    assert!(m.unmatched_a.is_empty() && m.unmatched_b.is_empty());
    assert!(m.max_abs_diff().unwrap() < 1e-6);
    for p in &m.pairs {
        assert!(alignment(exact.mode(p.a), comp.mode(p.b)) >= 0.99);
    }
}

#[test]
fn single_row_measurement_collapses_rotation_rank() {
    let data = rotation_snapshots(0.3, 10);
    let c = make_measurement::<f64>(MeasurementKind::Gaussian, 1, 2, 3).unwrap();
    // oracle: the measured data Y = C X is a single row, so rank(Y) = 1 < 2
    let y = c.to_dense().mul(data.x());
    assert_eq!(svd_econ(&y, 1e-10).unwrap().rank, 1);
    match compressed_dmd(&data, &c, 1e-10) {
        Err(Error::RankCollapse { full, projected }) => {
            assert_eq!(full, 2);
            assert_eq!(projected, 1);
        }
        other => panic!("expected rank collapse, got {other:?}"),
    }
}

#[test]
fn annihilated_mode_is_reported() {
    // C kills the second rotation block of a 4-state system
    let a = Matrix::from_rows(&[
        vec![0.3f64.cos(), -0.3f64.sin(), 0.0, 0.0],
        vec![0.3f64.sin(), 0.3f64.cos(), 0.0, 0.0],
        vec![0.0, 0.0, 0.9f64.cos(), -0.9f64.sin()],
        vec![0.0, 0.0, 0.9f64.sin(), 0.9f64.cos()],
    ]);
    let data = linear_snapshots(&a, 12, 3);
    let c = MeasurementMatrix::explicit(Matrix::from_rows(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]])).unwrap();
    assert!(matches!(compressed_dmd(&data, &c, 1e-10), Err(Error::RankCollapse { full: 4, projected: 2 })));
}

#[test]
fn advance_reproduces_rotation_trajectory() {
    let data = rotation_snapshots(0.3, 10);
    let res = exact_dmd(&data, 1e-10).unwrap();
    let seq = data.sequence();
    for k in 0..=10 {
        let pred = advance_modes(&res, k as f64);
        for i in 0..2 {
            assert!((pred[(i, 0)].re - seq[(i, k)]).abs() < 1e-8);
            assert!(pred[(i, 0)].im.abs() < 1e-8);
        }
    }
}

#[test]
fn advance_predicts_held_out_planted_snapshot() {
    let sys = FourierLtiSystem::<f64>::random((16, 16), 3, 0.01, 100, 11).unwrap();
    let (full, _) = generate_fourier_lti(&sys).unwrap();
    let seq = full.sequence();
    // fit on t in [0, 0.5] and predict t = 1.0
    let train = SnapshotPair::from_sequence(&seq.column_range(0, 51), 0.01, full.grid()).unwrap();
    let res = exact_dmd(&train, 1e-10).unwrap();
    let pred = advance_modes(&res, 1.0);
    let truth = seq.col(100);
    let err: f64 = truth.iter().enumerate().map(|(i, &v)| (pred[(i, 0)] - v).norm_sqr()).sum::<f64>().sqrt();
    assert!(err <= 1e-6 * vec_norm(truth), "relative error {}", err / vec_norm(truth));
}

#[test]
fn amplitudes_fit_first_snapshot() {
    let (a, _) = linear_operator(8, 1);
    let data = linear_snapshots(&a, 20, 2);
    let res = exact_dmd(&data, 1e-10).unwrap();
    let pred = advance_modes(&res, 0.0);
    let x0 = data.x().col(0);
    let err: f64 = x0.iter().enumerate().map(|(i, &v)| (pred[(i, 0)] - v).norm_sqr()).sum::<f64>().sqrt();
    assert!(err < 1e-9 * vec_norm(x0));
}

#[test]
fn projection_of_result() {
    let (a, _) = linear_operator(6, 9);
    let data = linear_snapshots(&a, 15, 4);
    let res = exact_dmd(&data, 1e-10).unwrap();
    let same = project_dmd_result(&res, &MeasurementMatrix::identity(6)).unwrap();
    assert_eq!(same.phi, res.phi);

    let q = MeasurementMatrix::explicit(orthogonal(6, 2)).unwrap();
    let rotated = project_dmd_result(&res, &q).unwrap();
    assert_eq!(rotated.lambdas, res.lambdas);
    for k in 0..res.rank {
        assert!((vec_norm(rotated.mode(k)) - vec_norm(res.mode(k))).abs() < 1e-12);
    }
}

#[test]
fn measured_modes_are_eigenvectors_of_measured_operator() {
    // rank-2 rotation dynamics lifted into 10 dimensions, measured with 3 rows
    let lift = orthogonal(10, 8).select_columns(&[0, 1]);
    let rot = rotation_snapshots(0.3, 12);
    let data = rot.transform(|z| lift.mul(z), None).unwrap();
    let res = exact_dmd(&data, 1e-10).unwrap();
    assert_eq!(res.rank, 2);
    let c = make_measurement::<f64>(MeasurementKind::Gaussian, 3, 10, 4).unwrap();
    let cd = c.to_dense();
    let ay = dmd_operator(&cd.mul(data.x()), &cd.mul(data.xp()), 1e-10).unwrap();
    for k in 0..res.rank {
        let cphi = cd.mul(&Matrix::column_vector(res.mode(k).to_vec()));
        let lhs = ay.mul(&cphi);
        let rhs = cphi.scale(res.lambdas[k]);
        assert!(lhs.sub(&rhs).fro_norm() <= 1e-8 * cphi.fro_norm());
    }
}

#[test]
fn shape_errors() {
    let x = Matrix::<f64>::zeros(3, 4);
    let xp = Matrix::<f64>::zeros(3, 5);
    assert!(SnapshotPair::new(x.clone(), xp, 1.0, None).is_err());
    assert!(SnapshotPair::new(x.clone(), x.clone(), 1.0, Some((2, 2))).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn right_unitary_invariance(seed in 0u64..10_000) {
        let (a, _) = linear_operator(6, seed);
        let data = linear_snapshots(&a, 12, seed + 1);
        let base = exact_dmd(&data, 1e-10).unwrap();
        let p = random_unitary(12, seed + 2);
        let moved = data.transform(|z| z.to_complex().mul(&p.adjoint()), None).unwrap();
        let res = exact_dmd(&moved, 1e-10).unwrap();
        let m = match_eigen(&base, &res);
        prop_assert!(m.unmatched_a.is_empty());
        prop_assert!(m.max_abs_diff().unwrap() < 1e-10);
        for pair in &m.pairs {
            prop_assert!(alignment(base.mode(pair.a), res.mode(pair.b)) >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn left_unitary_covariance(seed in 0u64..10_000) {
        let (a, _) = linear_operator(8, seed);
        let data = linear_snapshots(&a, 14, seed + 1);
        let base = exact_dmd(&data, 1e-10).unwrap();
        let q = random_unitary(8, seed + 3);
        let moved = data.transform(|z| q.mul(&z.to_complex()), None).unwrap();
        let res = exact_dmd(&moved, 1e-10).unwrap();
        let m = match_eigen(&base, &res);
        prop_assert!(m.max_abs_diff().unwrap() < 1e-10);
        let expected = q.mul(&base.phi);
        for pair in &m.pairs {
            prop_assert!(alignment(expected.col(pair.a), res.mode(pair.b)) >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn compressed_spectrum_equals_full_when_rank_is_kept(seed in 0u64..10_000, extra in 0usize..4) {
        let (a, lambdas) = linear_operator(8, seed);
        let data = linear_snapshots(&a, 20, seed + 1);
        let c = make_measurement::<f64>(MeasurementKind::Gaussian, 8 + extra, 8 + extra, seed + 2);
        // p must not exceed n, so lift the state first when p > 8
        let lift = orthogonal(8 + extra, seed + 5).select_columns(&(0..8).collect::<Vec<_>>());
        let lifted = data.transform(|z| lift.mul(z), None).unwrap();
        let c = c.unwrap();
        let full = exact_dmd(&lifted, 1e-10).unwrap();
        let comp = compressed_dmd(&lifted, &c, 1e-10).unwrap();
        let m = match_eigen(&full, &comp);
        prop_assert!(m.unmatched_a.is_empty() && m.unmatched_b.is_empty());
        prop_assert!(m.max_abs_diff().unwrap() < 1e-8);
        let truth = match_eigenvalues(&lambdas, &comp.lambdas, None);
        prop_assert!(truth.max_abs_diff().unwrap() < 1e-8);
    }
}
