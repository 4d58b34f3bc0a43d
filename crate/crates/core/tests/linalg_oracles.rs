use csdmd::linalg::{eig_dense, eig_residuals, pinv_from_svd, svd_econ, Matrix, DEFAULT_MAX_DIM};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

fn complex_gaussian(rows: usize, cols: usize, seed: u64) -> Matrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    })
}

/// One-sided Jacobi (Hestenes) SVD on plain row-major vectors: rotate column
/// pairs until all are mutually orthogonal, then read off column norms.
fn hestenes_singular_values(a: &Matrix<f64>) -> Vec<f64> {
    let (n, m) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| a[(i, j)]).collect()).collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..m {
            for q in p + 1..m {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Characteristic polynomial coefficients by the Faddeev-LeVerrier
/// recursion, highest degree first and monic.
fn char_poly(a: &Matrix<f64>) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![1.0];
    let mut mk = Matrix::<f64>::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = a.mul(&mk);
        for i in 0..n {
            next[(i, i)] += c;
        }
        mk = next;
        let amk = a.mul(&mk);
        let tr: f64 = (0..n).map(|i| amk[(i, i)]).sum();
        c = -tr / k as f64;
        coeffs.push(c);
    }
    coeffs
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Roots of a monic polynomial by simultaneous Durand-Kerner iteration.
fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let bound = 1.0 + coeffs[1..].iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * bound).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let step = horner(coeffs, z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

#[test]
fn svd_matches_hestenes_oracle() {
    let x = gaussian(16, 8, 7);
    let svd = svd_econ(&x, 1e-10).unwrap();
    let oracle = hestenes_singular_values(&x);
    assert_eq!(svd.rank, 8);
    for (a, b) in svd.sigma.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-10 * oracle[0], "sigma {a} vs oracle {b}");
    }
}

#[test]
fn svd_factors_are_orthonormal_and_reconstruct() {
    let x = complex_gaussian(40, 12, 3);
    let svd = svd_econ(&x, 1e-10).unwrap();
    let r = svd.rank;
    let eye = Matrix::<Complex64>::identity(r);
    assert!(svd.u.adjoint().mul(&svd.u).sub(&eye).fro_norm() < 1e-10);
    assert!(svd.v.adjoint().mul(&svd.v).sub(&eye).fro_norm() < 1e-10);
    assert!(svd.reconstruct().sub(&x).fro_norm() <= 1e-8 * x.fro_norm());
}

#[test]
fn svd_of_wide_matrix_swaps_factors() {
    let x = gaussian(5, 30, 21);
    let svd = svd_econ(&x, 1e-10).unwrap();
    assert_eq!(svd.u.shape(), (5, 5));
    assert_eq!(svd.v.shape(), (30, 5));
    let oracle = hestenes_singular_values(&x.transpose());
    for (a, b) in svd.sigma.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-10 * oracle[0]);
    }
}

#[test]
fn svd_rank_one_outer_product() {
    let x: Matrix<f64> = Matrix::from_rows(&[vec![3.0, 3.0], vec![0.0, 0.0], vec![4.0, 4.0]]);
    let svd = svd_econ(&x, 1e-10).unwrap();
    assert_eq!(svd.rank, 1);
    assert!((svd.sigma[0] - 5.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn svd_rejects_zero_matrix() {
    let err = svd_econ(&Matrix::<f64>::zeros(4, 2), 1e-10).unwrap_err();
    assert!(matches!(err, csdmd::Error::ZeroMatrix));
}

#[test]
fn eigenvalues_are_roots_of_characteristic_polynomial() {
    let a = gaussian(8, 8, 11);
    let eig = eig_dense(&a, DEFAULT_MAX_DIM).unwrap();
    let coeffs = char_poly(&a);
    let scale: f64 = coeffs.iter().map(|c| c.abs()).sum();
    for &l in &eig.values {
        let p = horner(&coeffs, l);
        let mag: f64 = coeffs.iter().enumerate().map(|(i, c)| c.abs() * l.norm().powi((8 - i) as i32)).sum();
        assert!(p.norm() <= 1e-10 * mag.max(scale), "p({l}) = {p}");
    }
    let mut roots = durand_kerner(&coeffs);
    for &l in &eig.values {
        let (k, d) = roots
            .iter()
            .enumerate()
            .map(|(k, r)| (k, (r - l).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert!(d < 1e-8, "eigenvalue {l} has no matching polynomial root (closest {d})");
        roots.remove(k);
    }
    assert!(roots.is_empty());
}

#[test]
fn eigen_residuals_are_small() {
    let a = complex_gaussian(30, 30, 5);
    let eig = eig_dense(&a, DEFAULT_MAX_DIM).unwrap();
    for r in eig_residuals(&a, &eig) {
        assert!(r <= 1e-8);
    }
    for k in 0..30 {
        let w = eig.vectors.col(k);
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let big = w.iter().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
        assert!(big.im.abs() < 1e-12 && big.re > 0.0);
    }
}

#[test]
fn rotation_spectrum() {
    let t = 0.3f64;
    let a = Matrix::from_rows(&[vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]]);
    let eig = eig_dense(&a, DEFAULT_MAX_DIM).unwrap();
    let expect = [Complex64::from_polar(1.0, 0.3), Complex64::from_polar(1.0, -0.3)];
    for (l, e) in eig.values.iter().zip(&expect) {
        assert!((l - e).norm() < 1e-14);
    }
}

#[test]
fn eig_rejects_oversized_and_nonsquare() {
    assert!(eig_dense(&Matrix::<f64>::zeros(3, 2), DEFAULT_MAX_DIM).is_err());
    assert!(eig_dense(&Matrix::<f64>::identity(5), 4).is_err());
}

#[test]
fn pinv_of_rank_deficient_diagonal() {
    let d = Matrix::diag(&[2.0, 0.0]);
    let pinv = pinv_from_svd(&svd_econ(&d, 1e-10).unwrap());
    let expect = Matrix::diag(&[Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
    assert!(pinv.sub(&expect).fro_norm() < 1e-14);
}

#[test]
fn pinv_is_left_inverse_for_full_column_rank() {
    let x = gaussian(10, 4, 13);
    let pinv = pinv_from_svd(&svd_econ(&x, 1e-10).unwrap());
    let prod = pinv.mul(&x.to_complex());
    assert!(prod.sub(&Matrix::identity(4)).fro_norm() < 1e-9);
    let xc = x.to_complex();
    assert!(xc.mul(&pinv).mul(&xc).sub(&xc).fro_norm() <= 1e-8 * xc.fro_norm());
}

#[test]
fn f32_svd_agrees_with_f64() {
    let x = gaussian(12, 6, 17);
    let x32 = x.map(|v| v as f32);
    let s64 = svd_econ(&x, 1e-6).unwrap();
    let s32 = svd_econ(&x32, 1e-6f32).unwrap();
    for (a, b) in s64.sigma.iter().zip(&s32.sigma) {
        assert!((a - *b as f64).abs() < 1e-3 * s64.sigma[0]);
    }
}

/// Orthonormal square matrix from Gram-Schmidt on a Gaussian draw.
fn unitary(n: usize, seed: u64) -> Matrix<Complex64> {
    csdmd::linalg::orthonormalize(&complex_gaussian(n, n, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn left_unitary_preserves_singular_values(seed in 0u64..10_000, n in 6usize..14, m in 2usize..6) {
        let x = complex_gaussian(n, m, seed);
        let q = unitary(n, seed + 1);
        let a = svd_econ(&x, 1e-10).unwrap();
        let b = svd_econ(&q.mul(&x), 1e-10).unwrap();
        prop_assert_eq!(a.rank, b.rank);
        for (s, t) in a.sigma.iter().zip(&b.sigma) {
            prop_assert!((s - t).abs() <= 1e-10 * a.sigma[0]);
        }
    }

    #[test]
    fn right_unitary_preserves_left_subspace(seed in 0u64..10_000, n in 8usize..16, m in 2usize..7) {
        let x = complex_gaussian(n, m, seed);
        let p = unitary(m, seed + 7);
        let a = svd_econ(&x, 1e-10).unwrap();
        let b = svd_econ(&x.mul(&p.adjoint()), 1e-10).unwrap();
        for (s, t) in a.sigma.iter().zip(&b.sigma) {
            prop_assert!((s - t).abs() <= 1e-10 * a.sigma[0]);
        }
        // projector difference bounds the largest principal angle
        let pa = a.u.mul(&a.u.adjoint());
        let pb = b.u.mul(&b.u.adjoint());
        prop_assert!(pa.sub(&pb).fro_norm() <= 1e-8);
    }

    #[test]
    fn svd_columns_orthonormal(seed in 0u64..10_000, n in 3usize..20, m in 1usize..10) {
        let x = gaussian(n, m, seed);
        let s = svd_econ(&x, 1e-10).unwrap();
        let eye = Matrix::<Complex64>::identity(s.rank);
        prop_assert!(s.u.adjoint().mul(&s.u).sub(&eye).fro_norm() < 1e-10);
        prop_assert!(s.v.adjoint().mul(&s.v).sub(&eye).fro_norm() < 1e-10);
        prop_assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.reconstruct().sub(&x.to_complex()).fro_norm() <= 1e-8 * x.fro_norm());
    }
}
