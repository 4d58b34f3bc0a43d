#![allow(dead_code)]

use csdmd::dmd::SnapshotPair;
use csdmd::linalg::{orthonormalize, Matrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Real orthogonal n×n matrix.
pub fn orthogonal(n: usize, seed: u64) -> Matrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Matrix<Complex64> = Matrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), 0.0));
    orthonormalize(&g).map(|z| z.re)
}

/// Block-diagonal damped rotations conjugated by a random orthogonal
/// matrix; `n` must be even. Returns the operator and its eigenvalues.
pub fn linear_operator(n: usize, seed: u64) -> (Matrix<f64>, Vec<Complex64>) {
    assert!(n % 2 == 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Matrix::<f64>::zeros(n, n);
    let mut lambdas = Vec::new();
    for b in 0..n / 2 {
        let r = 0.95 + 0.05 * rng.random::<f64>();
        let theta = 0.15 + 0.35 * b as f64 + 0.1 * rng.random::<f64>();
        let (c, s) = (r * theta.cos(), r * theta.sin());
        d[(2 * b, 2 * b)] = c;
        d[(2 * b, 2 * b + 1)] = -s;
        d[(2 * b + 1, 2 * b)] = s;
        d[(2 * b + 1, 2 * b + 1)] = c;
        lambdas.push(Complex64::from_polar(r, theta));
        lambdas.push(Complex64::from_polar(r, -theta));
    }
    let q = orthogonal(n, seed.wrapping_add(1));
    (q.mul(&d).mul(&q.transpose()), lambdas)
}

/// `m + 1` snapshots of `x_{k+1} = A x_k` from a random start.
pub fn linear_snapshots(a: &Matrix<f64>, m: usize, seed: u64) -> SnapshotPair<f64> {
    let n = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut cols = vec![x.clone()];
    for _ in 0..m {
        x = a.mul_vec(&x);
        cols.push(x.clone());
    }
    SnapshotPair::from_sequence(&Matrix::from_columns(n, &cols), 1.0, None).unwrap()
}

pub fn rotation_snapshots(theta: f64, m: usize) -> SnapshotPair<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let a = Matrix::from_rows(&[vec![c, -s], vec![s, c]]);
    let mut x = vec![1.0, 0.0];
    let mut cols = vec![x.clone()];
    for _ in 0..m {
        x = a.mul_vec(&x);
        cols.push(x.clone());
    }
    SnapshotPair::from_sequence(&Matrix::from_columns(2, &cols), 1.0, None).unwrap()
}

/// Snapshot pairs `(x_j, A x_j)` from `m` independent random states, which
/// gives a well-conditioned full-row-rank `X` when `m ≥ n`.
pub fn linear_pairs(a: &Matrix<f64>, m: usize, seed: u64) -> SnapshotPair<f64> {
    let n = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Matrix<f64> = Matrix::from_fn(n, m, |_, _| rng.sample(StandardNormal));
    let xp = a.mul(&x);
    SnapshotPair::new(x, xp, 1.0, None).unwrap()
}
