//! Exact and compressed dynamic mode decomposition.

use num_complex::Complex;
use num_traits::{Float, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_dense, lstsq_normal, svd_econ, EconSvd, Matrix, DEFAULT_MAX_DIM};
use crate::scalar::{Real, Scalar};
use crate::sensing::{apply_measurement, MeasurementMatrix};

/// Relative magnitude below which an eigenvalue counts as zero and its mode
/// falls back to the projected form `U w`.
const ZERO_EIGENVALUE_REL: f64 = 1e-12;

/// Snapshot matrices `X = [x₀ … x_{m−1}]` and `X′ = [x₁ … x_m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPair<E: Scalar = f64> {
    x: Matrix<E>,
    xp: Matrix<E>,
    dt: E::Real,
    grid: Option<(usize, usize)>,
}

impl<E: Scalar> SnapshotPair<E> {
    pub fn new(x: Matrix<E>, xp: Matrix<E>, dt: E::Real, grid: Option<(usize, usize)>) -> Result<Self> {
        if x.shape() != xp.shape() {
            return Err(Error::Dimension(format!("X is {:?} but X' is {:?}", x.shape(), xp.shape())));
        }
        if x.cols() == 0 || x.rows() == 0 {
            return Err(Error::Dimension("empty snapshot matrix".into()));
        }
        if !(dt > E::Real::zero()) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if let Some((nx, ny)) = grid {
            if nx * ny != x.rows() {
                return Err(Error::Dimension(format!("grid {nx}x{ny} does not match {} rows", x.rows())));
            }
        }
        if !x.all_finite() || !xp.all_finite() {
            return Err(Error::Dimension("snapshots contain non-finite values".into()));
        }
        Ok(SnapshotPair { x, xp, dt, grid })
    }

    /// Splits a sequence `[x₀ … x_m]` into `(X, X′)`.
    pub fn from_sequence(seq: &Matrix<E>, dt: E::Real, grid: Option<(usize, usize)>) -> Result<Self> {
        if seq.cols() < 2 {
            return Err(Error::Dimension("need at least two snapshots".into()));
        }
        let m = seq.cols() - 1;
        Self::new(seq.column_range(0, m), seq.column_range(1, m + 1), dt, grid)
    }

    /// The full sequence `[x₀ … x_m]`.
    pub fn sequence(&self) -> Matrix<E> {
        let m = self.x.cols();
        let mut cols: Vec<Vec<E>> = (0..m).map(|j| self.x.col(j).to_vec()).collect();
        cols.push(self.xp.col(m - 1).to_vec());
        Matrix::from_columns(self.x.rows(), &cols)
    }

    pub fn x(&self) -> &Matrix<E> {
        &self.x
    }

    pub fn xp(&self) -> &Matrix<E> {
        &self.xp
    }

    pub fn dt(&self) -> E::Real {
        self.dt
    }

    pub fn grid(&self) -> Option<(usize, usize)> {
        self.grid
    }

    /// State dimension n.
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// Snapshot count m.
    pub fn m(&self) -> usize {
        self.x.cols()
    }

    /// Applies `f` to both matrices, e.g. a left or right transformation.
    pub fn transform<F: Scalar<Real = E::Real>>(
        &self,
        f: impl Fn(&Matrix<E>) -> Matrix<F>,
        grid: Option<(usize, usize)>,
    ) -> Result<SnapshotPair<F>> {
        SnapshotPair::new(f(&self.x), f(&self.xp), self.dt, grid)
    }
}

/// Output of a DMD computation.
#[derive(Debug, Clone)]
pub struct DmdResult<T: Real = f64> {
    /// Discrete-time eigenvalues Λ.
    pub lambdas: Vec<Complex<T>>,
    /// Continuous-time eigenvalues `log(λ)/dt` (principal branch).
    pub omegas: Vec<Complex<T>>,
    /// Eigenvectors of the reduced operator, r×r.
    pub w: Matrix<Complex<T>>,
    /// Modes, n×r (or p×r after projection).
    pub phi: Matrix<Complex<T>>,
    /// Reduced operator `Ã = Uᴴ X′ V Σ⁻¹`, r×r.
    pub atilde: Matrix<Complex<T>>,
    /// Least-squares fit of `Φ b ≈ x₀`.
    pub amplitudes: Vec<Complex<T>>,
    pub svd: EconSvd<T>,
    pub rank: usize,
    pub dt: T,
}

impl<T: Real> DmdResult<T> {
    pub fn mode(&self, k: usize) -> &[Complex<T>] {
        self.phi.col(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PipelinePath {
    /// DMD on full-state data.
    Path1A,
    /// Compress full data, decompose, rebuild modes from full snapshots.
    Path1B,
    /// Recover full snapshots from measurements, then DMD.
    Path2A,
    /// DMD on measurements, then sparse recovery of each mode.
    Path2B,
}

impl std::str::FromStr for PipelinePath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "1A" | "PATH1A" => Ok(PipelinePath::Path1A),
            "1B" | "PATH1B" => Ok(PipelinePath::Path1B),
            "2A" | "PATH2A" => Ok(PipelinePath::Path2A),
            "2B" | "PATH2B" => Ok(PipelinePath::Path2B),
            _ => Err(Error::Config(format!("unknown pipeline path '{s}'"))),
        }
    }
}

impl std::fmt::Display for PipelinePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PipelinePath::Path1A => "1A",
            PipelinePath::Path1B => "1B",
            PipelinePath::Path2A => "2A",
            PipelinePath::Path2B => "2B",
        })
    }
}

fn omega<T: Real>(l: Complex<T>, dt: T) -> Complex<T> {
    if l.norm() == T::zero() {
        return Complex::new(-T::max_value(), T::zero());
    }
    l.ln() / dt
}

/// Reduced operator, eigendecomposition and mode projection shared by the
/// exact and compressed variants.
///
/// `xp_source` supplies the snapshots used to build modes, `x_source` the
/// ones used for the zero-eigenvalue fallback.
fn decompose<E: Scalar, F: Scalar<Real = E::Real>>(
    svd: EconSvd<E::Real>,
    yp: &Matrix<E>,
    xp_source: &Matrix<F>,
    x_source: &Matrix<F>,
    dt: E::Real,
) -> Result<DmdResult<E::Real>> {
    let vsig = svd.v.scale_columns(&svd.sigma_inv());
    let yp_vsig = yp.mul_promote(&vsig);
    let atilde = svd.u.adjoint_mul(&yp_vsig);
    let eig = eig_dense(&atilde, DEFAULT_MAX_DIM)?;

    let m_full = xp_source.mul_promote(&vsig);
    let mut phi = m_full.mul(&eig.vectors);
    let lmax = eig.values.iter().map(|l| l.norm()).fold(E::Real::zero(), Float::max);
    let zero_cut = E::Real::lit(ZERO_EIGENVALUE_REL) * lmax;
    let zero_idx: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k].norm() < zero_cut).collect();
    if !zero_idx.is_empty() {
        let u_full = x_source.mul_promote(&vsig);
        for &k in &zero_idx {
            let col = u_full.mul_vec(eig.vectors.col(k));
            phi.col_mut(k).copy_from_slice(&col);
        }
    }

    let x0: Vec<Complex<E::Real>> = x_source.col(0).iter().map(|v| v.to_complex()).collect();
    let amplitudes = lstsq_normal(&phi, &x0, E::Real::lit(1e-14))?;
    let omegas = eig.values.iter().map(|&l| omega(l, dt)).collect();
    let rank = svd.rank;
    Ok(DmdResult { lambdas: eig.values, omegas, w: eig.vectors, phi, atilde, amplitudes, svd, rank, dt })
}

/// Exact DMD: `X = UΣVᴴ`, `Ã = UᴴX′VΣ⁻¹`, `ÃW = WΛ`, `Φ = X′VΣ⁻¹W`.
pub fn exact_dmd<E: Scalar>(data: &SnapshotPair<E>, truncation_tol: E::Real) -> Result<DmdResult<E::Real>> {
    if data.m() < 2 && data.n() < 2 {
        return Err(Error::Dimension("DMD needs at least a 2-dimensional problem".into()));
    }
    let svd = svd_econ(data.x(), truncation_tol)?;
    decompose(svd, data.xp(), data.xp(), data.x(), data.dt())
}

/// Compressed DMD: decompose `(CX, CX′)` and rebuild full-state modes as
/// `X′ V_Y Σ_Y⁻¹ W_Y`.
///
/// Fails with [`Error::RankCollapse`] when the row space of `CX` misses part
/// of the row space of `X`, i.e. `C` annihilates part of the signal.
pub fn compressed_dmd<T: Real, E: Scalar<Real = T> + From<T>>(
    full: &SnapshotPair<E>,
    c: &MeasurementMatrix<T>,
    truncation_tol: T,
) -> Result<DmdResult<T>> {
    let y = apply_measurement(c, full.x())?;
    let yp = apply_measurement(c, full.xp())?;
    let svd = svd_econ(&y, truncation_tol)?;
    check_row_space(full.x(), &svd)?;
    decompose(svd, &yp, full.xp(), full.x(), full.dt())
}

/// DMD of projected data only, without access to full snapshots; the modes
/// are the projected modes `Φ_Y`.
pub fn projected_dmd<E: Scalar>(y: &SnapshotPair<E>, truncation_tol: E::Real) -> Result<DmdResult<E::Real>> {
    exact_dmd(y, truncation_tol)
}

fn check_row_space<E: Scalar>(x: &Matrix<E>, svd: &EconSvd<E::Real>) -> Result<()> {
    let xv = x.mul_promote(&svd.v);
    let proj = xv.mul(&svd.v.adjoint());
    let xc = x.to_complex();
    let resid = xc.sub(&proj).fro_norm() / xc.fro_norm();
    let m = E::Real::from_usize_lossy(x.cols());
    let allowed = (m.sqrt() * svd.truncation_tol).max(E::Real::lit(1e-8));
    if resid > allowed {
        // row-space deficiency of one direction removes at least one rank
        let full_rank = svd_econ(x, svd.truncation_tol).map(|s| s.rank).unwrap_or(svd.rank + 1);
        return Err(Error::RankCollapse { full: full_rank.max(svd.rank + 1), projected: svd.rank });
    }
    Ok(())
}

/// Model state `Φ diag(exp(ω t)) b` at time `t`.
pub fn advance_modes<T: Real>(result: &DmdResult<T>, t: T) -> Matrix<Complex<T>> {
    let coeffs: Vec<Complex<T>> = result
        .omegas
        .iter()
        .zip(&result.lambdas)
        .zip(&result.amplitudes)
        .map(|((&w, &l), &b)| if l.norm() == T::zero() { if t == T::zero() { b } else { Complex::zero() } } else { (w * t).exp() * b })
        .collect();
    Matrix::column_vector(result.phi.mul_vec(&coeffs))
}

/// Same eigenvalues with modes replaced by `C Φ`.
pub fn project_dmd_result<T: Real>(result: &DmdResult<T>, c: &MeasurementMatrix<T>) -> Result<DmdResult<T>> {
    let phi = apply_measurement(c, &result.phi)?;
    Ok(DmdResult { phi, ..result.clone() })
}
