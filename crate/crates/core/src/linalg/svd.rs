use num_traits::{Float, Zero};
use num_complex::Complex;

use super::{hermitian_eigen, Matrix};
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-10;

/// Economy SVD `X ≈ U diag(sigma) Vᴴ` truncated to numerical rank.
#[derive(Debug, Clone)]
pub struct EconSvd<T: Real = f64> {
    /// n×r left singular vectors.
    pub u: Matrix<Complex<T>>,
    /// Descending singular values, length r.
    pub sigma: Vec<T>,
    /// m×r right singular vectors.
    pub v: Matrix<Complex<T>>,
    pub rank: usize,
    /// Relative threshold actually applied: the requested tolerance, raised
    /// to the resolution floor of the Gram eigenproblem when necessary.
    pub truncation_tol: T,
}

impl<T: Real> EconSvd<T> {
    pub fn reconstruct(&self) -> Matrix<Complex<T>> {
        let s: Vec<Complex<T>> = self.sigma.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.u.scale_columns(&s).mul(&self.v.adjoint())
    }

    pub fn sigma_inv(&self) -> Vec<Complex<T>> {
        self.sigma.iter().map(|&x| Complex::new(x.recip(), T::zero())).collect()
    }
}

/// Smallest relative singular value the method of snapshots can resolve for
/// a Gram matrix of dimension `m`: Gram eigenvalues carry an absolute error of
/// order `m·ε·σ₀²`, so singular values below `sqrt(100·m·ε)·σ₀` are noise.
fn resolution_floor<T: Real>(m: usize) -> T {
    (T::lit(100.0) * T::from_usize_lossy(m.max(1)) * T::epsilon()).sqrt()
}

/// Economy SVD by the method of snapshots.
///
/// For an n×m matrix with m ≤ n the m×m Gram matrix `XᴴX = V Σ² Vᴴ` is
/// diagonalized and `U = X V Σ⁻¹`. Wide matrices are handled through `Xᴴ`
/// with the roles of `U` and `V` swapped.
pub fn svd_econ<E: Scalar>(x: &Matrix<E>, truncation_tol: E::Real) -> Result<EconSvd<E::Real>> {
    let (n, m) = x.shape();
    if n == 0 || m == 0 {
        return Err(Error::Dimension(format!("svd of empty {n}x{m} matrix")));
    }
    if !(truncation_tol >= E::Real::zero()) || !truncation_tol.is_finite() {
        return Err(Error::Config(format!("truncation tolerance {truncation_tol} must be finite and nonnegative")));
    }
    if let Some(k) = x.as_slice().iter().position(|v| !v.finite()) {
        return Err(Error::NonFinite { row: k % n, col: k / n });
    }
    if x.fro_norm() == E::Real::zero() {
        return Err(Error::ZeroMatrix);
    }
    if m > n {
        let t = snapshots(&x.adjoint(), truncation_tol)?;
        return Ok(EconSvd { u: t.v, sigma: t.sigma, v: t.u, rank: t.rank, truncation_tol: t.truncation_tol });
    }
    snapshots(x, truncation_tol)
}

fn snapshots<E: Scalar>(x: &Matrix<E>, truncation_tol: E::Real) -> Result<EconSvd<E::Real>> {
    let m = x.cols();
    let gram = x.gram();
    let eig = hermitian_eigen(&gram)?;
    let tol = truncation_tol.max(resolution_floor(m));
    let s0 = eig.values[0].max(E::Real::zero()).sqrt();
    let sigma: Vec<E::Real> = eig
        .values
        .iter()
        .map(|&l| l.max(E::Real::zero()).sqrt())
        .take_while(|&s| s > tol * s0)
        .collect();
    let rank = sigma.len();
    if rank == 0 {
        return Err(Error::RankZero { tol: tol.to_f64_lossy() });
    }
    let idx: Vec<usize> = (0..rank).collect();
    let v = eig.vectors.select_columns(&idx).to_complex();
    let inv: Vec<Complex<E::Real>> = sigma.iter().map(|&s| Complex::new(s.recip(), E::Real::zero())).collect();
    let u = x.mul_promote(&v).scale_columns(&inv);
    Ok(EconSvd { u, sigma, v, rank, truncation_tol: tol })
}

impl<E: Scalar> Matrix<E> {
    /// `self · rhs` for a complex right-hand side, whatever the element type
    /// of `self`.
    pub(crate) fn mul_promote(&self, rhs: &Matrix<Complex<E::Real>>) -> Matrix<Complex<E::Real>> {
        assert_eq!(self.cols(), rhs.rows());
        let mut out = Matrix::zeros(self.rows(), rhs.cols());
        for j in 0..rhs.cols() {
            let oc = out.col_mut(j);
            for k in 0..self.cols() {
                let b = rhs[(k, j)];
                for (o, &a) in oc.iter_mut().zip(self.col(k)) {
                    *o += a.to_complex() * b;
                }
            }
        }
        out
    }
}

/// Moore-Penrose pseudo-inverse `V Σ⁻¹ Uᴴ` of the truncated factorization.
pub fn pinv_from_svd<T: Real>(svd: &EconSvd<T>) -> Matrix<Complex<T>> {
    svd.v.scale_columns(&svd.sigma_inv()).mul(&svd.u.adjoint())
}
