//! Measurement operators and the unitary 2D Fourier sparse basis.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{vec_norm, Matrix};
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    Gaussian,
    Bernoulli,
    SinglePixel,
    ExplicitUnitary,
    /// Arbitrary user-supplied real matrix.
    Explicit,
    Identity,
}

impl MeasurementKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasurementKind::Gaussian => "gaussian",
            MeasurementKind::Bernoulli => "bernoulli",
            MeasurementKind::SinglePixel => "pixel",
            MeasurementKind::ExplicitUnitary => "explicit_unitary",
            MeasurementKind::Explicit => "explicit",
            MeasurementKind::Identity => "identity",
        }
    }
}

impl std::str::FromStr for MeasurementKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(MeasurementKind::Gaussian),
            "bernoulli" => Ok(MeasurementKind::Bernoulli),
            "pixel" | "single_pixel" | "single-pixel" => Ok(MeasurementKind::SinglePixel),
            "identity" => Ok(MeasurementKind::Identity),
            other => Err(Error::Config(format!("unknown measurement kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Payload<T: Real> {
    Dense(Matrix<T>),
    Pixels(Vec<usize>),
    Identity,
}

/// A real p×n measurement operator `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix<T: Real = f64> {
    kind: MeasurementKind,
    p: usize,
    n: usize,
    seed: u64,
    payload: Payload<T>,
}

impl<T: Real> MeasurementMatrix<T> {
    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sampled pixel indices for single-pixel operators.
    pub fn pixels(&self) -> Option<&[usize]> {
        match &self.payload {
            Payload::Pixels(p) => Some(p),
            _ => None,
        }
    }

    pub fn identity(n: usize) -> Self {
        MeasurementMatrix { kind: MeasurementKind::Identity, p: n, n, seed: 0, payload: Payload::Identity }
    }

    /// Single-pixel operator from explicit indices, which must be unique and
    /// inside `[0, n)`.
    pub fn from_pixels(indices: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(Error::BadDimensions(format!("pixel index {i} outside [0, {n})")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::BadDimensions(format!("duplicate pixel index {i}")));
            }
        }
        if indices.is_empty() {
            return Err(Error::BadDimensions("no pixels".into()));
        }
        Ok(MeasurementMatrix { kind: MeasurementKind::SinglePixel, p: indices.len(), n, seed: 0, payload: Payload::Pixels(indices) })
    }

    /// Wraps a user matrix. The kind is `ExplicitUnitary` when the rows are
    /// orthonormal to 1e-8, `Explicit` otherwise.
    pub fn explicit(c: Matrix<T>) -> Result<Self> {
        let (p, n) = c.shape();
        if p == 0 || n == 0 || p > n {
            return Err(Error::BadDimensions(format!("explicit measurement {p}x{n} needs 1 <= p <= n")));
        }
        if !c.all_finite() {
            return Err(Error::BadDimensions("explicit measurement has non-finite entries".into()));
        }
        let cct = c.transpose().gram();
        let dev = cct.sub(&Matrix::identity(p)).fro_norm();
        let kind = if dev <= T::lit(1e-8) { MeasurementKind::ExplicitUnitary } else { MeasurementKind::Explicit };
        Ok(MeasurementMatrix { kind, p, n, seed: 0, payload: Payload::Dense(c) })
    }

    /// Dense p×n representation.
    pub fn to_dense(&self) -> Matrix<T> {
        match &self.payload {
            Payload::Dense(c) => c.clone(),
            Payload::Identity => Matrix::identity(self.n),
            Payload::Pixels(idx) => {
                let mut c = Matrix::zeros(self.p, self.n);
                for (r, &i) in idx.iter().enumerate() {
                    c[(r, i)] = T::one();
                }
                c
            }
        }
    }

    /// Row `i` of `C` as a dense vector.
    pub fn row(&self, i: usize) -> Vec<T> {
        match &self.payload {
            Payload::Dense(c) => c.row(i),
            Payload::Identity => {
                let mut r = vec![T::zero(); self.n];
                r[i] = T::one();
                r
            }
            Payload::Pixels(idx) => {
                let mut r = vec![T::zero(); self.n];
                r[idx[i]] = T::one();
                r
            }
        }
    }

    /// `C x` for a single vector.
    pub fn apply_vec<E: Scalar<Real = T> + From<T>>(&self, x: &[E]) -> Result<Vec<E>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("measurement expects length {}, got {}", self.n, x.len())));
        }
        Ok(match &self.payload {
            Payload::Identity => x.to_vec(),
            Payload::Pixels(idx) => idx.iter().map(|&i| x[i]).collect(),
            Payload::Dense(c) => c.mul_vec(x),
        })
    }

    /// `Cᴴ y` (C is real, so this is `Cᵀ y`).
    pub fn adjoint_vec<E: Scalar<Real = T> + From<T>>(&self, y: &[E]) -> Result<Vec<E>> {
        if y.len() != self.p {
            return Err(Error::Dimension(format!("adjoint expects length {}, got {}", self.p, y.len())));
        }
        Ok(match &self.payload {
            Payload::Identity => y.to_vec(),
            Payload::Pixels(idx) => {
                let mut out = vec![E::zero(); self.n];
                for (&i, &v) in idx.iter().zip(y) {
                    out[i] = v;
                }
                out
            }
            Payload::Dense(c) => (0..self.n)
                .map(|j| c.col(j).iter().zip(y).map(|(&a, &b)| E::from(a) * b).sum())
                .collect(),
        })
    }
}

/// Deterministic measurement operator of the requested kind.
///
/// Gaussian entries are drawn from N(0, 1/p) and Bernoulli entries are
/// ±1/√p, so `E‖Cx‖² = ‖x‖²`.
pub fn make_measurement<T: Real>(kind: MeasurementKind, p: usize, n: usize, seed: u64) -> Result<MeasurementMatrix<T>> {
    if p == 0 || p > n {
        return Err(Error::BadDimensions(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = T::from_usize_lossy(p).sqrt().recip();
    let payload = match kind {
        MeasurementKind::Identity => {
            if p != n {
                return Err(Error::BadDimensions(format!("identity measurement needs p = n, got {p} != {n}")));
            }
            Payload::Identity
        }
        MeasurementKind::Gaussian => Payload::Dense(Matrix::from_fn(p, n, |_, _| {
            let z: f64 = rng.sample(StandardNormal);
            T::lit(z) * scale
        })),
        MeasurementKind::Bernoulli => {
            Payload::Dense(Matrix::from_fn(p, n, |_, _| if rng.random::<bool>() { scale } else { -scale }))
        }
        MeasurementKind::SinglePixel => {
            let mut idx = rand::seq::index::sample(&mut rng, n, p).into_vec();
            idx.sort_unstable();
            Payload::Pixels(idx)
        }
        MeasurementKind::ExplicitUnitary | MeasurementKind::Explicit => {
            return Err(Error::BadDimensions("explicit measurements need a user matrix".into()));
        }
    };
    Ok(MeasurementMatrix { kind, p, n, seed, payload })
}

/// `Y = C X`. Single-pixel operators select rows instead of multiplying.
pub fn apply_measurement<T: Real, E: Scalar<Real = T> + From<T>>(c: &MeasurementMatrix<T>, x: &Matrix<E>) -> Result<Matrix<E>> {
    if x.rows() != c.n {
        return Err(Error::Dimension(format!("measurement is {}x{}, data has {} rows", c.p, c.n, x.rows())));
    }
    Ok(match &c.payload {
        Payload::Identity => x.clone(),
        Payload::Pixels(idx) => x.select_rows(idx),
        Payload::Dense(m) => m.mul(x),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Spatial field to Fourier coefficients, `s = Ψᴴ x`.
    Forward,
    /// Fourier coefficients to spatial field, `x = Ψ s`.
    Inverse,
}

/// Unitary 2D DFT on an `nx × ny` grid.
///
/// Fields are stored with x varying fastest: entry `(ix, iy)` lives at
/// `ix + nx·iy`. Coefficient `(kx, ky)` uses the same layout. The synthesis
/// atom for `(kx, ky)` is `exp(2πi(kx·ix/nx + ky·iy/ny)) / √n`.
#[derive(Clone)]
pub struct SparseBasis<T: Real = f64> {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<T>>,
    ix: Arc<dyn Fft<T>>,
    fy: Arc<dyn Fft<T>>,
    iy: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for SparseBasis<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparseBasis").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl<T: Real> SparseBasis<T> {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Dimension(format!("empty grid {nx}x{ny}")));
        }
        let mut planner = FftPlanner::new();
        Ok(SparseBasis {
            nx,
            ny,
            fx: planner.plan_fft_forward(nx),
            ix: planner.plan_fft_inverse(nx),
            fy: planner.plan_fft_forward(ny),
            iy: planner.plan_fft_inverse(ny),
        })
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place unitary transform of one field.
    pub fn apply_inplace(&self, buf: &mut [Complex<T>], dir: Direction) -> Result<()> {
        let n = self.len();
        if buf.len() != n {
            return Err(Error::Dimension(format!("basis expects length {n}, got {}", buf.len())));
        }
        let (fx, fy) = match dir {
            Direction::Forward => (&self.fx, &self.fy),
            Direction::Inverse => (&self.ix, &self.iy),
        };
        fx.process(buf);
        if self.ny > 1 {
            let mut t = vec![Complex::new(T::zero(), T::zero()); n];
            transpose(buf, &mut t, self.nx, self.ny);
            fy.process(&mut t);
            transpose(&t, buf, self.ny, self.nx);
        }
        let s = T::from_usize_lossy(n).sqrt().recip();
        for x in buf.iter_mut() {
            *x = *x * s;
        }
        Ok(())
    }

    pub fn apply(&self, s: &[Complex<T>], dir: Direction) -> Result<Vec<Complex<T>>> {
        let mut out = s.to_vec();
        self.apply_inplace(&mut out, dir)?;
        Ok(out)
    }

    /// Transforms every column of a matrix.
    pub fn apply_columns(&self, x: &Matrix<Complex<T>>, dir: Direction) -> Result<Matrix<Complex<T>>> {
        let mut out = x.clone();
        for j in 0..out.cols() {
            self.apply_inplace(out.col_mut(j), dir)?;
        }
        Ok(out)
    }

    /// Flat coefficient index of a (possibly negative) wavenumber pair.
    pub fn wavenumber_index(&self, kx: i64, ky: i64) -> Result<usize> {
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        if kx <= -nx || kx >= nx || ky <= -ny || ky >= ny {
            return Err(Error::BadWavenumber { kx, ky, nx: self.nx, ny: self.ny });
        }
        Ok((kx.rem_euclid(nx) + nx * ky.rem_euclid(ny)) as usize)
    }

    /// Index of the coefficient `(−kx, −ky)` paired with `idx` under
    /// conjugate symmetry of real fields.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (kx, ky) = (idx % self.nx, idx / self.nx);
        (self.nx - kx) % self.nx + self.nx * ((self.ny - ky) % self.ny)
    }

    /// Synthesis atom (column of Ψ) for a flat coefficient index.
    pub fn atom(&self, idx: usize) -> Vec<Complex<T>> {
        let mut s = vec![Complex::new(T::zero(), T::zero()); self.len()];
        s[idx] = Complex::new(T::one(), T::zero());
        self.apply_inplace(&mut s, Direction::Inverse).expect("length matches grid");
        s
    }
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], rows_fast: usize, cols_slow: usize) {
    // src[i + rows_fast * j] -> dst[j + cols_slow * i]
    for j in 0..cols_slow {
        for i in 0..rows_fast {
            dst[j + cols_slow * i] = src[i + rows_fast * j];
        }
    }
}

pub fn apply_basis<T: Real>(psi: &SparseBasis<T>, s: &[Complex<T>], dir: Direction) -> Result<Vec<Complex<T>>> {
    psi.apply(s, dir)
}

/// Largest normalized inner product between a row of `C` and a column of
/// `Ψ`, in `[0, 1]`.
pub fn mutual_coherence<T: Real>(c: &MeasurementMatrix<T>, psi: &SparseBasis<T>) -> Result<T> {
    let n = psi.len();
    if c.n() != n {
        return Err(Error::Dimension(format!("measurement has {} columns, basis has {n}", c.n())));
    }
    match c.kind() {
        // every pixel/Fourier pair has magnitude exactly 1/√n
        MeasurementKind::SinglePixel | MeasurementKind::Identity => Ok(T::from_usize_lossy(n).sqrt().recip()),
        _ => dense_coherence(c, psi),
    }
}

/// Coherence computed row by row through the forward transform; valid for
/// any operator.
pub fn dense_coherence<T: Real>(c: &MeasurementMatrix<T>, psi: &SparseBasis<T>) -> Result<T> {
    let mut best = T::zero();
    for i in 0..c.p() {
        let row: Vec<Complex<T>> = c.row(i).into_iter().map(|x| Complex::new(x, T::zero())).collect();
        let nrm = vec_norm(&row);
        if nrm == T::zero() {
            continue;
        }
        // |ψ_jᴴ c| over all j is |Ψᴴ c|
        let coeffs = psi.apply(&row, Direction::Forward)?;
        let m = coeffs.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        best = best.max(m / nrm);
    }
    Ok(best.min(T::one()))
}

pub const DEFAULT_SAFETY: f64 = 1.5;

/// `ceil(safety · K · ln(n/K))` measurements for a K-sparse signal in
/// dimension `n`.
pub fn recommended_measurements(k: usize, n: f64, safety: f64) -> Result<usize> {
    if k == 0 || !(n > k as f64) || !(safety > 0.0) || !n.is_finite() || !safety.is_finite() {
        return Err(Error::BadDimensions(format!("need 1 <= K < n and safety > 0 (K = {k}, n = {n}, safety = {safety})")));
    }
    let raw = safety * k as f64 * (n / k as f64).ln();
    // absorb round-off so that exact integers do not round up
    Ok(((raw * (1.0 - 1e-12)).ceil() as usize).max(1))
}
