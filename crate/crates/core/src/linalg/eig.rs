use num_complex::Complex;
use num_traits::{Float, Zero};

use super::{canonical_phase, vec_norm, Matrix};
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub const DEFAULT_MAX_DIM: usize = 512;

/// Iteration budget per eigenvalue for the shifted QR sweep.
const ITERS_PER_EIGENVALUE: usize = 60;

/// `A W = W diag(values)` with unit-norm, phase-normalized columns of `W`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T: Real = f64> {
    pub values: Vec<Complex<T>>,
    pub vectors: Matrix<Complex<T>>,
}

/// Dense eigendecomposition of a general square matrix: Householder
/// reduction to Hessenberg form, complex single-shift QR to Schur form, and
/// back substitution on the triangular factor for the eigenvectors.
///
/// Eigenvalues are ordered by descending modulus, then descending imaginary
/// part. Each eigenvector is scaled to unit norm with its largest entry real
/// and positive.
pub fn eig_dense<E: Scalar>(a: &Matrix<E>, max_dim: usize) -> Result<EigenDecomposition<E::Real>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("eigendecomposition of non-square {}x{}", a.rows(), a.cols())));
    }
    if a.rows() > max_dim {
        return Err(Error::Dimension(format!("dimension {} exceeds eigensolver limit {max_dim}", a.rows())));
    }
    if !a.all_finite() {
        return Err(Error::Dimension("eigendecomposition of non-finite matrix".into()));
    }
    let a = a.to_complex();
    let n = a.rows();
    if n == 0 {
        return Ok(EigenDecomposition { values: vec![], vectors: Matrix::zeros(0, 0) });
    }
    let (mut h, mut z) = hessenberg(&a);
    schur_qr(&mut h, &mut z)?;
    let vectors = triangular_eigenvectors(&h, &z);
    let values: Vec<Complex<E::Real>> = (0..n).map(|i| h[(i, i)]).collect();

    // moduli are compared on a grid of 1e-9 relative to the largest so that
    // conjugate pairs, whose computed moduli differ by rounding, order by
    // imaginary part
    let lmax = values.iter().map(|l| l.norm()).fold(E::Real::zero(), |a, b| if b > a { b } else { a });
    let quantum = E::Real::lit(1e-9) * lmax;
    let key = |l: Complex<E::Real>| if quantum > E::Real::zero() { (l.norm() / quantum).round() } else { l.norm() };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (li, lj) = (values[i], values[j]);
        key(lj)
            .partial_cmp(&key(li))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(lj.im.partial_cmp(&li.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let out = EigenDecomposition {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: vectors.select_columns(&order),
    };

    #[cfg(debug_assertions)]
    {
        let bound = E::Real::lit(1e-8);
        for (k, r) in eig_residuals(&a, &out).into_iter().enumerate() {
            debug_assert!(r <= bound, "eigenpair {k} residual {r} exceeds bound");
        }
    }
    Ok(out)
}

/// Per-column `‖A wᵢ − λᵢ wᵢ‖₂ / (‖A‖_F ‖wᵢ‖₂)`.
pub fn eig_residuals<T: Real>(a: &Matrix<Complex<T>>, e: &EigenDecomposition<T>) -> Vec<T> {
    let an = a.fro_norm().max(T::min_positive_value());
    let aw = a.mul(&e.vectors);
    (0..e.values.len())
        .map(|k| {
            let w = e.vectors.col(k);
            let r: Vec<Complex<T>> = aw.col(k).iter().zip(w).map(|(&x, &y)| x - e.values[k] * y).collect();
            vec_norm(&r) / (an * vec_norm(w).max(T::min_positive_value()))
        })
        .collect()
}

fn hessenberg<T: Real>(a: &Matrix<Complex<T>>) -> (Matrix<Complex<T>>, Matrix<Complex<T>>) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = Matrix::<Complex<T>>::identity(n);
    let zero = Complex::new(T::zero(), T::zero());
    let two = Complex::new(T::lit(2.0), T::zero());
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = vec_norm(&v);
        if xnorm == T::zero() {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == T::zero() { Complex::new(T::one(), T::zero()) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vn = vec_norm(&v);
        if vn == T::zero() {
            continue;
        }
        for x in v.iter_mut() {
            *x = *x / vn;
        }
        // H <- P H on rows k+1..n
        for j in 0..n {
            let mut s = zero;
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + t, j)];
            }
            if s == zero {
                continue;
            }
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= two * *vi * s;
            }
        }
        // H <- H P and Q <- Q P on columns k+1..n
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let mut s = zero;
                for (t, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + t)] * *vi;
                }
                if s == zero {
                    continue;
                }
                for (t, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + t)] -= two * s * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = zero;
        }
    }
    (h, q)
}

/// Rotation `[[c, s], [−s̄, c]]` mapping `(x, y)` to `(r, 0)`.
fn givens<T: Real>(x: Complex<T>, y: Complex<T>) -> (T, Complex<T>) {
    let ny = y.norm();
    if ny == T::zero() {
        return (T::one(), Complex::new(T::zero(), T::zero()));
    }
    let nx = x.norm();
    if nx == T::zero() {
        return (T::zero(), Complex::new(T::one(), T::zero()));
    }
    let r = nx.hypot(ny);
    let c = nx / r;
    let s = (x / nx) * y.conj() / r;
    (c, s)
}

fn schur_qr<T: Real>(h: &mut Matrix<Complex<T>>, z: &mut Matrix<Complex<T>>) -> Result<()> {
    let n = h.rows();
    let eps = T::epsilon();
    let hnorm = h.fro_norm().max(T::min_positive_value());
    let zero = Complex::new(T::zero(), T::zero());
    let half = T::lit(0.5);
    let budget = ITERS_PER_EIGENVALUE * n.max(1);
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut iter = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == T::zero() {
                diag = hnorm;
            }
            if sub <= eps * diag {
                h[(lo, lo - 1)] = zero;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        total += 1;
        if total > budget {
            return Err(Error::Convergence { what: "shifted QR", iterations: budget });
        }
        iter += 1;

        let mu = if iter % 11 == 0 {
            h[(hi, hi)] + Complex::new(T::lit(0.75) * h[(hi, hi - 1)].norm(), T::zero())
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let mid = (a + d) * half;
            let disc = ((a - d) * (a - d) * T::lit(0.25) + b * c).sqrt();
            let l1 = mid + disc;
            let l2 = mid - disc;
            if (l1 - d).norm() <= (l2 - d).norm() { l1 } else { l2 }
        };

        let mut x = h[(lo, lo)] - mu;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let cc = Complex::new(c, T::zero());
            let sc = s.conj();
            let jstart = if k > lo { k - 1 } else { lo };
            for j in jstart..n {
                let t1 = h[(k, j)];
                let t2 = h[(k + 1, j)];
                h[(k, j)] = cc * t1 + s * t2;
                h[(k + 1, j)] = -sc * t1 + cc * t2;
            }
            if k > lo {
                h[(k + 1, k - 1)] = zero;
            }
            let iend = (k + 2).min(hi);
            for i in 0..=iend {
                let t1 = h[(i, k)];
                let t2 = h[(i, k + 1)];
                h[(i, k)] = cc * t1 + sc * t2;
                h[(i, k + 1)] = -s * t1 + cc * t2;
            }
            for i in 0..n {
                let t1 = z[(i, k)];
                let t2 = z[(i, k + 1)];
                z[(i, k)] = cc * t1 + sc * t2;
                z[(i, k + 1)] = -s * t1 + cc * t2;
            }
        }
    }
    // clear round-off below the diagonal
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = zero;
        }
    }
    Ok(())
}

fn triangular_eigenvectors<T: Real>(t: &Matrix<Complex<T>>, z: &Matrix<Complex<T>>) -> Matrix<Complex<T>> {
    let n = t.rows();
    let tn = t.fro_norm();
    let small = T::epsilon() * if tn > T::zero() { tn } else { T::one() };
    let big = T::lit(1e150);
    let mut y = Matrix::<Complex<T>>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex::new(T::one(), T::zero());
        for j in (0..k).rev() {
            let mut s = Complex::new(T::zero(), T::zero());
            for l in j + 1..=k {
                s += t[(j, l)] * y[(l, k)];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < small {
                d = Complex::new(small, T::zero());
            }
            y[(j, k)] = -s / d;
            if y[(j, k)].norm() > big {
                let inv = big.recip();
                for l in j..=k {
                    y[(l, k)] = y[(l, k)] * inv;
                }
            }
        }
    }
    let mut w = z.mul(&y);
    for k in 0..n {
        let col = w.col_mut(k);
        let nrm = vec_norm(col);
        if nrm > T::zero() {
            for x in col.iter_mut() {
                *x = *x / nrm;
            }
        }
        canonical_phase(col);
    }
    w
}
