//! Dense matrices, the method-of-snapshots SVD and a small dense
//! nonsymmetric eigensolver.

mod eig;
mod hermitian;
mod svd;

use num_traits::Float;
use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

pub use eig::{eig_dense, eig_residuals, EigenDecomposition, DEFAULT_MAX_DIM};
pub use hermitian::{hermitian_eigen, HermitianEigen};
pub use svd::{pinv_from_svd, svd_econ, EconSvd, DEFAULT_TRUNCATION_TOL};

/// Dense column-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Scalar> std::fmt::Debug for Matrix<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols.min(8) {
                write!(f, "{:?} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<E: Scalar> Matrix<E> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![E::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = E::one();
        }
        m
    }

    /// Builds a matrix from column-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<E>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|x| !x.finite()) {
            return Err(Error::NonFinite { row: k % rows.max(1), col: k / rows.max(1) });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Row-major literal constructor, mostly for tests and small examples.
    pub fn from_rows(rows: &[Vec<E>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn from_columns(rows: usize, columns: &[Vec<E>]) -> Self {
        assert!(columns.iter().all(|c| c.len() == rows), "column length mismatch");
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            data.extend_from_slice(c);
        }
        Matrix { rows, cols: columns.len(), data }
    }

    pub fn column_vector(v: Vec<E>) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v }
    }

    pub fn diag(d: &[E]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<E> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[E] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [E] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<E> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.finite())
    }

    pub fn map<F: Scalar>(&self, f: impl Fn(E) -> F) -> Matrix<F> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn to_complex(&self) -> Matrix<Complex<E::Real>> {
        self.map(|x| x.to_complex())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn fro_norm(&self) -> E::Real {
        self.data.iter().map(|x| x.norm_sqr()).sum::<E::Real>().sqrt()
    }

    pub fn scale(&self, s: E) -> Self {
        self.map(|x| x * s)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix { rows: self.rows, cols: idx.len(), data }
    }

    pub fn column_range(&self, start: usize, end: usize) -> Self {
        Matrix {
            rows: self.rows,
            cols: end - start,
            data: self.data[start * self.rows..end * self.rows].to_vec(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)])
    }

    /// Scales column `j` by `s[j]`.
    pub fn scale_columns(&self, s: &[E]) -> Self {
        assert_eq!(s.len(), self.cols);
        let mut out = self.clone();
        for (j, &sj) in s.iter().enumerate() {
            for x in out.col_mut(j) {
                *x *= sj;
            }
        }
        out
    }

    /// `self · rhs`, promoting entries of `self` into the element type of
    /// `rhs` (real·complex is allowed).
    pub fn mul<F: Scalar + From<E>>(&self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch in mul");
        let mut out = Matrix::<F>::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let oc = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b == F::zero() {
                    continue;
                }
                let ac = self.col(k);
                for (o, &a) in oc.iter_mut().zip(ac) {
                    *o += F::from(a) * b;
                }
            }
        }
        out
    }

    /// `selfᴴ · rhs` without materializing the adjoint.
    pub fn adjoint_mul<F: Scalar + From<E>>(&self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.rows, rhs.rows, "row mismatch in adjoint_mul");
        Matrix::from_fn(self.cols, rhs.cols, |i, j| {
            self.col(i).iter().zip(rhs.col(j)).map(|(&a, &b)| F::from(a.conj()) * b).sum()
        })
    }

    /// `self · v` for a column vector.
    pub fn mul_vec<F: Scalar + From<E>>(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len(), "length mismatch in mul_vec");
        let mut out = vec![F::zero(); self.rows];
        for (k, &b) in v.iter().enumerate() {
            if b == F::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(k)) {
                *o += F::from(a) * b;
            }
        }
        out
    }

    /// Gram matrix `selfᴴ · self`, exploiting Hermitian symmetry.
    pub fn gram(&self) -> Self {
        let m = self.cols;
        let mut g = Self::zeros(m, m);
        for j in 0..m {
            for i in 0..=j {
                let v: E = self.col(i).iter().zip(self.col(j)).map(|(&a, &b)| a.conj() * b).sum();
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }
}

impl<E> Index<(usize, usize)> for Matrix<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl<E> IndexMut<(usize, usize)> for Matrix<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}

pub fn vec_norm<E: Scalar>(v: &[E]) -> E::Real {
    v.iter().map(|x| x.norm_sqr()).sum::<E::Real>().sqrt()
}

/// `aᴴ b`.
pub fn dot_conj<E: Scalar>(a: &[E], b: &[E]) -> E {
    a.iter().zip(b).map(|(&x, &y)| x.conj() * y).sum()
}

/// Scale- and phase-invariant similarity `|φᴴψ| / (‖φ‖‖ψ‖)` in `[0, 1]`.
pub fn alignment<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    let na = vec_norm(a);
    let nb = vec_norm(b);
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    (dot_conj(a, b).norm() / (na * nb)).min(T::one())
}

/// Rotates a vector so that its largest-magnitude entry is real-positive.
pub fn canonical_phase<T: Real>(v: &mut [Complex<T>]) {
    let mut best = T::zero();
    let mut phase = Complex::new(T::one(), T::zero());
    for x in v.iter() {
        let m = x.norm();
        if m > best {
            best = m;
            phase = x.conj() / m;
        }
    }
    if best > T::zero() {
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Solves the square linear system `a · x = b` by LU with partial pivoting.
pub fn solve<T: Real>(a: &Matrix<Complex<T>>, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    lu_solve(a, b).map(|(x, _)| x)
}

/// LU solve that also reports the smallest pivot magnitude.
fn lu_solve<T: Real>(a: &Matrix<Complex<T>>, b: &[Complex<T>]) -> Result<(Vec<Complex<T>>, T)> {
    let n = a.rows();
    let mut min_pivot = T::infinity();
    if !a.is_square() || b.len() != n {
        return Err(Error::Dimension(format!("solve: {}x{} with rhs {}", a.rows(), a.cols(), b.len())));
    }
    let mut lu = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| lu[(i, k)].norm().partial_cmp(&lu[(j, k)].norm()).unwrap())
            .unwrap();
        if lu[(p, k)].norm() == T::zero() {
            return Err(Error::Dimension("solve: singular matrix".into()));
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            x.swap(k, p);
        }
        let piv = lu[(k, k)];
        min_pivot = min_pivot.min(piv.norm());
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            if f == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            for j in k..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= lu[(k, j)] * x[j];
        }
        x[k] = s / lu[(k, k)];
    }
    Ok((x, min_pivot))
}

/// Least-squares solution of `min ‖a x − b‖₂` through the normal equations
/// with a Tikhonov floor: when a pivot of `aᴴa` falls below
/// `ridge · trace(aᴴa)/cols`, that amount is added to the diagonal.
pub fn lstsq_normal<T: Real>(a: &Matrix<Complex<T>>, b: &[Complex<T>], ridge: T) -> Result<Vec<Complex<T>>> {
    let mut g = a.gram();
    let k = g.rows();
    if k == 0 {
        return Ok(Vec::new());
    }
    let tr: T = (0..k).map(|i| g[(i, i)].re).sum::<T>() / T::from_usize_lossy(k);
    let floor = ridge * tr.max(T::min_positive_value());
    let rhs: Vec<Complex<T>> = (0..k).map(|i| dot_conj(a.col(i), b)).collect();
    if let Ok((x, min_pivot)) = lu_solve(&g, &rhs) {
        if min_pivot > floor && x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(x);
        }
    }
    for i in 0..k {
        g[(i, i)] += Complex::new(floor, T::zero());
    }
    solve(&g, &rhs)
}

/// Thin QR by modified Gram-Schmidt with one re-orthogonalization pass.
/// Returns only the orthonormal factor.
pub fn orthonormalize<T: Real>(a: &Matrix<Complex<T>>) -> Matrix<Complex<T>> {
    let mut q = a.clone();
    for j in 0..q.cols() {
        for _ in 0..2 {
            for i in 0..j {
                let (head, tail) = q.data.split_at_mut(j * q.rows);
                let qi = &head[i * q.rows..(i + 1) * q.rows];
                let qj = &mut tail[..q.rows];
                let r = dot_conj(qi, qj);
                for (x, &y) in qj.iter_mut().zip(qi) {
                    *x -= r * y;
                }
            }
        }
        let nrm = vec_norm(q.col(j));
        if nrm > T::zero() {
            for x in q.col_mut(j) {
                *x = *x / nrm;
            }
        }
    }
    q
}
