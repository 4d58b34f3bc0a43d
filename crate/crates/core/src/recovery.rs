//! Sparse recovery of full-state modes from projected modes.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::dmd::DmdResult;
use crate::error::{Error, Result};
use crate::linalg::{lstsq_normal, vec_norm, Matrix};
use crate::scalar::Real;
use crate::sensing::{Direction, MeasurementKind, MeasurementMatrix, SparseBasis};

/// Linear operator `A: ℂⁿ → ℂᵖ` with its adjoint.
pub trait SensingOperator<T: Real>: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, s: &[Complex<T>]) -> Result<Vec<Complex<T>>>;
    fn adjoint(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>>;

    /// Column `j` of the operator.
    fn column(&self, j: usize) -> Result<Vec<Complex<T>>> {
        let mut e = vec![Complex::zero(); self.cols()];
        e[j] = Complex::new(T::one(), T::zero());
        self.apply(&e)
    }

    /// Euclidean norm of every column.
    fn column_norms(&self) -> Result<Vec<T>> {
        (0..self.cols()).map(|j| self.column(j).map(|c| vec_norm(&c))).collect()
    }
}

/// Explicit complex matrix as an operator.
#[derive(Debug, Clone)]
pub struct DenseOperator<T: Real = f64>(pub Matrix<Complex<T>>);

impl<T: Real> SensingOperator<T> for DenseOperator<T> {
    fn rows(&self) -> usize {
        self.0.rows()
    }
    fn cols(&self) -> usize {
        self.0.cols()
    }
    fn apply(&self, s: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if s.len() != self.0.cols() {
            return Err(Error::Dimension(format!("operator has {} columns, vector has {}", self.0.cols(), s.len())));
        }
        Ok(self.0.mul_vec(s))
    }
    fn adjoint(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if y.len() != self.0.rows() {
            return Err(Error::Dimension(format!("operator has {} rows, vector has {}", self.0.rows(), y.len())));
        }
        Ok((0..self.0.cols()).map(|j| crate::linalg::dot_conj(self.0.col(j), y)).collect())
    }
    fn column(&self, j: usize) -> Result<Vec<Complex<T>>> {
        Ok(self.0.col(j).to_vec())
    }
    fn column_norms(&self) -> Result<Vec<T>> {
        Ok((0..self.0.cols()).map(|j| vec_norm(self.0.col(j))).collect())
    }
}

/// The composite `C Ψ` of a measurement matrix and the Fourier basis.
#[derive(Debug, Clone, Copy)]
pub struct MeasuredBasis<'a, T: Real = f64> {
    c: &'a MeasurementMatrix<T>,
    psi: &'a SparseBasis<T>,
}

impl<'a, T: Real> MeasuredBasis<'a, T> {
    pub fn new(c: &'a MeasurementMatrix<T>, psi: &'a SparseBasis<T>) -> Result<Self> {
        if c.n() != psi.len() {
            return Err(Error::Dimension(format!("measurement has {} columns, basis has {}", c.n(), psi.len())));
        }
        Ok(MeasuredBasis { c, psi })
    }
}

impl<T: Real> SensingOperator<T> for MeasuredBasis<'_, T> {
    fn rows(&self) -> usize {
        self.c.p()
    }
    fn cols(&self) -> usize {
        self.psi.len()
    }
    fn apply(&self, s: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let x = self.psi.apply(s, Direction::Inverse)?;
        self.c.apply_vec(&x)
    }
    fn adjoint(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let x = self.c.adjoint_vec(y)?;
        self.psi.apply(&x, Direction::Forward)
    }
    fn column(&self, j: usize) -> Result<Vec<Complex<T>>> {
        match (self.c.kind(), self.c.pixels()) {
            (MeasurementKind::SinglePixel, Some(pix)) => {
                let (nx, ny) = self.psi.grid();
                let (kx, ky) = (j % nx, j / nx);
                let scale = T::from_usize_lossy(nx * ny).sqrt().recip();
                let two_pi = T::PI() + T::PI();
                Ok(pix
                    .iter()
                    .map(|&q| {
                        let (ix, iy) = (q % nx, q / nx);
                        // reduce the phase modulo the period before scaling to keep it exact
                        let fx = T::from_usize_lossy((kx * ix) % nx) / T::from_usize_lossy(nx);
                        let fy = T::from_usize_lossy((ky * iy) % ny) / T::from_usize_lossy(ny);
                        Complex::from_polar(scale, two_pi * (fx + fy))
                    })
                    .collect())
            }
            _ => self.c.apply_vec(&self.psi.atom(j)),
        }
    }

    fn column_norms(&self) -> Result<Vec<T>> {
        let n = self.psi.len();
        match self.c.kind() {
            // every Fourier atom has entries of modulus 1/√n
            MeasurementKind::SinglePixel | MeasurementKind::Identity => {
                Ok(vec![(T::from_usize_lossy(self.c.p()) / T::from_usize_lossy(n)).sqrt(); n])
            }
            _ => {
                // Ψ is symmetric, so row i of CΨ is Ψ applied to row i of C
                let mut sq = vec![T::zero(); n];
                for i in 0..self.c.p() {
                    let row: Vec<Complex<T>> = self.c.row(i).into_iter().map(|v| Complex::new(v, T::zero())).collect();
                    for (s, z) in sq.iter_mut().zip(self.psi.apply(&row, Direction::Inverse)?) {
                        *s += z.norm_sqr();
                    }
                }
                Ok(sq.into_iter().map(|v| v.sqrt()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryConfig<T: Real = f64> {
    pub sparsity: usize,
    pub max_iters: usize,
    /// Relative residual at which iteration stops.
    pub residual_tol: T,
    /// Minimum relative decrease over `stall_window` iterations.
    pub stall_decrease: T,
    pub stall_window: usize,
}

impl<T: Real> RecoveryConfig<T> {
    pub fn new(sparsity: usize) -> Self {
        RecoveryConfig {
            sparsity,
            max_iters: 50,
            residual_tol: T::lit(1e-6),
            stall_decrease: T::lit(1e-4),
            stall_window: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(Error::Config("sparsity must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.residual_tol >= T::zero()) {
            return Err(Error::Config("residual tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Residual above which a halted recovery is reported as a failure.
const FAILURE_RESIDUAL: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct RecoveredMode<T: Real = f64> {
    /// Coefficients in the sparse basis, length n, at most K nonzeros.
    pub coeffs: Vec<Complex<T>>,
    /// Sorted indices of the nonzero coefficients.
    pub support: Vec<usize>,
    /// Spatial mode `Ψ · coeffs`; empty when recovered through a bare operator.
    pub spatial: Vec<Complex<T>>,
    /// `‖y − A·coeffs‖ / ‖y‖`.
    pub residual: T,
    pub iters: usize,
    /// Residual after each accepted iteration.
    pub history: Vec<T>,
}

impl<T: Real> RecoveredMode<T> {
    pub fn nonzeros(&self) -> usize {
        self.coeffs.iter().filter(|z| !z.is_zero()).count()
    }
}

/// Indices of the `k` largest magnitudes, ties broken by lower index.
fn top_k<T: Real>(v: &[Complex<T>], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let key = |i: &usize| v[*i].norm_sqr();
    let k = k.min(v.len());
    if k < idx.len() {
        idx.select_nth_unstable_by(k, |a, b| key(b).partial_cmp(&key(a)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(b)));
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

struct Fit<T: Real> {
    support: Vec<usize>,
    values: Vec<Complex<T>>,
    residual_vec: Vec<Complex<T>>,
    residual: T,
}

fn fit_support<T: Real>(
    a: &dyn SensingOperator<T>,
    y: &[Complex<T>],
    support: Vec<usize>,
    cache: &mut std::collections::HashMap<usize, Vec<Complex<T>>>,
) -> Result<(Vec<Complex<T>>, Matrix<Complex<T>>, Vec<usize>)> {
    let p = y.len();
    let mut cols = Vec::with_capacity(support.len());
    for &j in &support {
        if !cache.contains_key(&j) {
            cache.insert(j, a.column(j)?);
        }
        cols.push(cache[&j].clone());
    }
    let as_mat = Matrix::from_columns(p, &cols);
    let vals = lstsq_normal(&as_mat, y, T::lit(1e-12))?;
    Ok((vals, as_mat, support))
}

fn evaluate<T: Real>(as_mat: &Matrix<Complex<T>>, vals: &[Complex<T>], y: &[Complex<T>], y_norm: T) -> (Vec<Complex<T>>, T) {
    let ay = as_mat.mul_vec(vals);
    let r: Vec<Complex<T>> = y.iter().zip(&ay).map(|(&a, &b)| a - b).collect();
    let rn = vec_norm(&r) / y_norm;
    (r, rn)
}

/// Complex CoSaMP for `y ≈ A s` with `s` K-sparse.
pub fn cosamp<T: Real>(a: &dyn SensingOperator<T>, y: &[Complex<T>], cfg: &RecoveryConfig<T>) -> Result<RecoveredMode<T>> {
    cfg.validate()?;
    let (p, n) = (a.rows(), a.cols());
    if y.len() != p {
        return Err(Error::Dimension(format!("operator has {p} rows, measurement has {}", y.len())));
    }
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Dimension("measurement contains non-finite values".into()));
    }
    let y_norm = vec_norm(y);
    let y_max = y.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if y_norm <= T::min_positive_value().sqrt() || y_max == T::zero() {
        return Err(Error::ZeroInput);
    }
    let k = cfg.sparsity.min(n);
    let mut cache = std::collections::HashMap::new();
    // the proxy correlates the residual with normalized columns, so a
    // column is not favoured merely for being long
    let inv_norms: Vec<T> = a
        .column_norms()?
        .into_iter()
        .map(|c| if c > T::zero() { c.recip() } else { T::zero() })
        .collect();

    let mut best = Fit { support: Vec::new(), values: Vec::new(), residual_vec: y.to_vec(), residual: T::one() };
    let mut history = Vec::new();
    let mut iters = 0;
    let mut stalled = false;
    while iters < cfg.max_iters {
        iters += 1;
        let mut proxy = a.adjoint(&best.residual_vec)?;
        for (z, &w) in proxy.iter_mut().zip(&inv_norms) {
            *z = *z * w;
        }
        let mut merged = top_k(&proxy, 2 * k);
        merged.extend(best.support.iter().copied());
        merged.sort_unstable();
        merged.dedup();
        debug_assert!(merged.len() <= 3 * k);

        let (vals, _, merged) = fit_support(a, y, merged, &mut cache)?;
        let keep_local = top_k(&vals, k);
        let support: Vec<usize> = keep_local.iter().map(|&i| merged[i]).collect();
        // refit on the pruned support so the residual is the least-squares one
        let (values, as_mat, support) = fit_support(a, y, support, &mut cache)?;
        let (residual_vec, residual) = evaluate(&as_mat, &values, y, y_norm);

        if residual <= best.residual || history.is_empty() {
            best = Fit { support, values, residual_vec, residual };
        }
        history.push(best.residual);
        if best.residual <= cfg.residual_tol {
            break;
        }
        if history.len() > cfg.stall_window {
            let old = history[history.len() - 1 - cfg.stall_window];
            if old - best.residual < cfg.stall_decrease * old {
                stalled = true;
                break;
            }
        }
    }
    let halted = stalled || iters >= cfg.max_iters;
    if halted && best.residual > cfg.residual_tol && best.residual > T::lit(FAILURE_RESIDUAL) {
        return Err(Error::NoProgress { residual: best.residual.to_f64_lossy(), iterations: iters });
    }
    let mut coeffs = vec![Complex::zero(); n];
    for (&j, &v) in best.support.iter().zip(&best.values) {
        coeffs[j] = v;
    }
    Ok(RecoveredMode { coeffs, support: best.support, spatial: Vec::new(), residual: best.residual, iters, history })
}

/// Recovery of every projected mode `Φ_Y = C Ψ Φ_S`, column by column.
#[derive(Debug)]
pub struct RecoveredModes<T: Real = f64> {
    /// Spatial modes `Ψ φ_s`, n×r; zero columns where recovery failed.
    pub modes: Matrix<Complex<T>>,
    pub per_mode: Vec<Result<RecoveredMode<T>>>,
}

impl<T: Real> RecoveredModes<T> {
    pub fn residuals(&self) -> Vec<Option<T>> {
        self.per_mode.iter().map(|r| r.as_ref().ok().map(|m| m.residual)).collect()
    }

    pub fn failures(&self) -> usize {
        self.per_mode.iter().filter(|r| r.is_err()).count()
    }
}

/// Recovers the full-state modes of a DMD computed on measurements. The
/// eigenvalues of `projected` are unaffected.
pub fn recover_modes<T: Real>(
    projected: &DmdResult<T>,
    c: &MeasurementMatrix<T>,
    psi: &SparseBasis<T>,
    cfg: &RecoveryConfig<T>,
) -> Result<RecoveredModes<T>> {
    cfg.validate()?;
    if projected.phi.rows() != c.p() {
        return Err(Error::Dimension(format!(
            "projected modes have {} rows but C has {} measurements",
            projected.phi.rows(),
            c.p()
        )));
    }
    let op = MeasuredBasis::new(c, psi)?;
    let n = psi.len();
    let r = projected.phi.cols();
    let per_mode: Vec<Result<RecoveredMode<T>>> = (0..r)
        .into_par_iter()
        .map(|k| {
            let mut m = cosamp(&op, projected.phi.col(k), cfg).map_err(|e| e.at_stage(&format!("mode {k}")))?;
            m.spatial = psi.apply(&m.coeffs, Direction::Inverse)?;
            Ok(m)
        })
        .collect();
    let mut modes = Matrix::zeros(n, r);
    for (k, m) in per_mode.iter().enumerate() {
        if let Ok(m) = m {
            modes.col_mut(k).copy_from_slice(&m.spatial);
        }
    }
    Ok(RecoveredModes { modes, per_mode })
}

/// Mode recovery with [`l1_reconstruct`] in place of CoSaMP.
pub fn recover_modes_l1<T: Real>(
    projected: &DmdResult<T>,
    c: &MeasurementMatrix<T>,
    psi: &SparseBasis<T>,
    tol: T,
) -> Result<RecoveredModes<T>> {
    if projected.phi.rows() != c.p() {
        return Err(Error::Dimension(format!(
            "projected modes have {} rows but C has {} measurements",
            projected.phi.rows(),
            c.p()
        )));
    }
    let op = MeasuredBasis::new(c, psi)?;
    let n = psi.len();
    let r = projected.phi.cols();
    let per_mode: Vec<Result<RecoveredMode<T>>> = (0..r)
        .into_par_iter()
        .map(|k| {
            let y = projected.phi.col(k);
            let coeffs = l1_reconstruct(&op, y, tol).map_err(|e| e.at_stage(&format!("mode {k}")))?;
            let fit = op.apply(&coeffs)?;
            let r: Vec<Complex<T>> = y.iter().zip(&fit).map(|(&a, &b)| a - b).collect();
            let residual = vec_norm(&r) / vec_norm(y);
            let support: Vec<usize> = (0..n).filter(|&j| !coeffs[j].is_zero()).collect();
            let spatial = psi.apply(&coeffs, Direction::Inverse)?;
            Ok(RecoveredMode { coeffs, support, spatial, residual, iters: 0, history: vec![residual] })
        })
        .collect();
    let mut modes = Matrix::zeros(n, r);
    for (k, m) in per_mode.iter().enumerate() {
        if let Ok(m) = m {
            modes.col_mut(k).copy_from_slice(&m.spatial);
        }
    }
    Ok(RecoveredModes { modes, per_mode })
}

fn soft_threshold<T: Real>(z: Complex<T>, t: T) -> Complex<T> {
    let m = z.norm();
    if m <= t {
        Complex::zero()
    } else {
        z * ((m - t) / m)
    }
}

fn operator_norm_sq<T: Real>(a: &dyn SensingOperator<T>) -> Result<T> {
    let n = a.cols();
    let mut v: Vec<Complex<T>> = (0..n).map(|i| Complex::new(T::one(), T::from_usize_lossy(i % 7) * T::lit(0.1))).collect();
    let mut est = T::zero();
    for _ in 0..100 {
        let nv = vec_norm(&v);
        for z in v.iter_mut() {
            *z = *z / nv;
        }
        let w = a.adjoint(&a.apply(&v)?)?;
        let new = vec_norm(&w);
        v = w;
        if (new - est).abs() <= T::lit(1e-6) * new {
            est = new;
            break;
        }
        est = new;
    }
    Ok(est * T::lit(1.01))
}

/// Basis-pursuit style recovery `min ‖s‖₁` subject to `A s ≈ y` by
/// accelerated iterative shrinkage with a decreasing penalty, followed by a
/// least-squares refit on the detected support when it is small enough.
pub fn l1_reconstruct<T: Real>(a: &dyn SensingOperator<T>, y: &[Complex<T>], tol: T) -> Result<Vec<Complex<T>>> {
    let (p, n) = (a.rows(), a.cols());
    if y.len() != p {
        return Err(Error::Dimension(format!("operator has {p} rows, measurement has {}", y.len())));
    }
    let y_norm = vec_norm(y);
    if y_norm <= T::min_positive_value().sqrt() {
        return Err(Error::ZeroInput);
    }
    let lip = operator_norm_sq(a)?;
    let step = lip.recip();
    let aty = a.adjoint(y)?;
    let mut lambda = aty.iter().map(|z| z.norm()).fold(T::zero(), T::max) * T::lit(0.5);
    let lambda_min = lambda * T::lit(1e-10);
    let mut s = vec![Complex::zero(); n];
    let mut z = s.clone();
    let mut tk = T::one();
    let max_total = 200_000;
    let mut total = 0;
    let residual_of = |s: &[Complex<T>]| -> Result<T> {
        let r: Vec<Complex<T>> = a.apply(s)?.iter().zip(y).map(|(&u, &v)| v - u).collect();
        Ok(vec_norm(&r) / y_norm)
    };
    loop {
        // inner FISTA at fixed penalty
        for _ in 0..500 {
            total += 1;
            let az = a.apply(&z)?;
            let r: Vec<Complex<T>> = az.iter().zip(y).map(|(&u, &v)| u - v).collect();
            let g = a.adjoint(&r)?;
            let s_new: Vec<Complex<T>> =
                z.iter().zip(&g).map(|(&zi, &gi)| soft_threshold(zi - gi * step, lambda * step)).collect();
            let t_new = (T::one() + (T::one() + T::lit(4.0) * tk * tk).sqrt()) / T::lit(2.0);
            let mom = (tk - T::one()) / t_new;
            let diff: T = s_new.iter().zip(&s).map(|(&u, &v)| (u - v).norm_sqr()).sum::<T>().sqrt();
            z = s_new.iter().zip(&s).map(|(&u, &v)| u + (u - v) * mom).collect();
            s = s_new;
            tk = t_new;
            if diff <= T::lit(1e-12) * vec_norm(&s).max(T::min_positive_value()) {
                break;
            }
        }
        let smax = s.iter().map(|v| v.norm()).fold(T::zero(), T::max);
        let support: Vec<usize> = (0..n).filter(|&j| s[j].norm() > T::lit(1e-6) * smax).collect();
        if !support.is_empty() && support.len() < p {
            let cols: Vec<Vec<Complex<T>>> = support.iter().map(|&j| a.column(j)).collect::<Result<_>>()?;
            let vals = lstsq_normal(&Matrix::from_columns(p, &cols), y, T::lit(1e-12))?;
            let mut refit = vec![Complex::zero(); n];
            for (&j, &v) in support.iter().zip(&vals) {
                refit[j] = v;
            }
            if residual_of(&refit)? <= tol {
                return Ok(refit);
            }
        }
        if residual_of(&s)? <= tol {
            return Ok(s);
        }
        if lambda <= lambda_min || total >= max_total {
            return Err(Error::Convergence { what: "l1 shrinkage", iterations: total });
        }
        lambda = lambda * T::lit(0.3);
        z = s.clone();
        tk = T::one();
    }
}
