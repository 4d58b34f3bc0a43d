use num_traits::{Float, One, Zero};
use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition `A = V diag(values) Vᴴ` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<E: Scalar> {
    /// Eigenvalues, descending.
    pub values: Vec<E::Real>,
    /// Orthonormal eigenvectors, one per column, in the order of `values`.
    pub vectors: Matrix<E>,
}

/// Cyclic Jacobi eigensolver for Hermitian (real symmetric) matrices.
///
/// Only the upper triangle is trusted; the input is symmetrized first.
pub fn hermitian_eigen<E: Scalar>(a: &Matrix<E>) -> Result<HermitianEigen<E>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("hermitian_eigen on {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let mut a = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            E::from_real(a[(i, i)].re())
        } else if i < j {
            a[(i, j)]
        } else {
            a[(j, i)].conj()
        }
    });
    let mut v = Matrix::<E>::identity(n);
    let fro = a.fro_norm();
    let eps = <E::Real as num_traits::Float>::epsilon();
    let two = E::Real::lit(2.0);

    let mut converged = n <= 1 || fro == E::Real::zero();
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::Convergence { what: "Hermitian Jacobi", iterations: MAX_SWEEPS });
        }
        sweep += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = a[(p, q)];
                let gabs = g.modulus();
                if gabs <= eps * eps * fro {
                    continue;
                }
                let phase = g * E::from_real(gabs.recip());
                let app = a[(p, p)].re();
                let aqq = a[(q, q)].re();
                let tau = (aqq - app) / (two * gabs);
                let t = if tau >= E::Real::zero() {
                    (tau + (E::Real::one() + tau * tau).sqrt()).recip()
                } else {
                    -(-tau + (E::Real::one() + tau * tau).sqrt()).recip()
                };
                let c = (E::Real::one() + t * t).sqrt().recip();
                let s = t * c;
                let ce = E::from_real(c);
                let se = E::from_real(s) * phase;
                let sec = se.conj();
                // A <- A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = ce * akp - sec * akq;
                    a[(k, q)] = se * akp + ce * akq;
                }
                // A <- Jᴴ A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = ce * apk - se * aqk;
                    a[(q, k)] = sec * apk + ce * aqk;
                }
                a[(p, q)] = E::zero();
                a[(q, p)] = E::zero();
                a[(p, p)] = E::from_real(a[(p, p)].re());
                a[(q, q)] = E::from_real(a[(q, q)].re());
                let (vp, vq) = (p * n, q * n);
                let vs = &mut v.data;
                for k in 0..n {
                    let x = vs[vp + k];
                    let y = vs[vq + k];
                    vs[vp + k] = ce * x - sec * y;
                    vs[vq + k] = se * x + ce * y;
                }
            }
        }
        let mut off = E::Real::zero();
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    off += a[(i, j)].norm_sqr();
                }
            }
        }
        converged = off.sqrt() <= eps * fro;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re().partial_cmp(&a[(i, i)].re()).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)].re()).collect();
    let vectors = v.select_columns(&order);
    Ok(HermitianEigen { values, vectors })
}
