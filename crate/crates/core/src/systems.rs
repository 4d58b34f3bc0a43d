//! Synthetic data: a sparse-Fourier linear system and the double gyre flow.

use std::collections::HashSet;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmd::SnapshotPair;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::sensing::{Direction, SparseBasis};

/// Default frequency range (rad per unit time) for randomly drawn modes.
pub const DEFAULT_FREQUENCY_RANGE: (f64, f64) = (std::f64::consts::TAU * 0.5, std::f64::consts::TAU * 5.0);
/// Default damping range for randomly drawn modes.
pub const DEFAULT_DAMPING_RANGE: (f64, f64) = (-0.2, 0.0);

/// A field made of K planted Fourier atoms, each oscillating with its own
/// continuous-time eigenvalue.
///
/// Every atom `k` is paired with `−k` carrying the conjugate coefficient so
/// that the spatial field is real. The data therefore has 2K modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierLtiSystem<T: Real = f64> {
    pub grid: (usize, usize),
    pub wavenumbers: Vec<(i64, i64)>,
    /// Continuous eigenvalues `damping + i·frequency`.
    pub mu: Vec<Complex<T>>,
    pub init_amps: Vec<Complex<T>>,
    pub dt: T,
    /// Number of snapshot pairs; `m + 1` fields are generated.
    pub m: usize,
    pub seed: u64,
}

impl<T: Real> FourierLtiSystem<T> {
    /// Random system with distinct, non-self-conjugate wavenumbers and
    /// eigenvalues drawn from the default ranges.
    pub fn random(grid: (usize, usize), k: usize, dt: T, m: usize, seed: u64) -> Result<Self> {
        Self::random_with_ranges(grid, k, dt, m, seed, DEFAULT_FREQUENCY_RANGE, DEFAULT_DAMPING_RANGE)
    }

    pub fn random_with_ranges(
        grid: (usize, usize),
        k: usize,
        dt: T,
        m: usize,
        seed: u64,
        frequency: (f64, f64),
        damping: (f64, f64),
    ) -> Result<Self> {
        let (nx, ny) = grid;
        if nx < 3 || ny < 1 {
            return Err(Error::BadDimensions(format!("grid {nx}x{ny} too small")));
        }
        if !(frequency.0 <= frequency.1) || !(damping.0 <= damping.1) || damping.1 > 0.0 {
            return Err(Error::Config("invalid frequency or damping range".into()));
        }
        let kx_max = ((nx - 1) / 2) as i64;
        let ky_max = ((ny - 1) / 2) as i64;
        let available = ((2 * kx_max + 1) * (2 * ky_max + 1) - 1) / 2;
        if k == 0 || k as i64 > available {
            return Err(Error::Config(format!("cannot place {k} conjugate atom pairs on a {nx}x{ny} grid")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut used = HashSet::new();
        let mut wavenumbers = Vec::with_capacity(k);
        while wavenumbers.len() < k {
            let kx = rng.random_range(-kx_max..=kx_max);
            let ky = rng.random_range(-ky_max..=ky_max);
            if (kx, ky) == (0, 0) || used.contains(&(kx, ky)) {
                continue;
            }
            used.insert((kx, ky));
            used.insert((-kx, -ky));
            wavenumbers.push((kx, ky));
        }
        let mu = (0..k)
            .map(|_| {
                let f = rng.random_range(frequency.0..=frequency.1);
                let d = rng.random_range(damping.0..=damping.1);
                Complex::new(T::lit(d), T::lit(f))
            })
            .collect();
        let init_amps = (0..k)
            .map(|_| {
                let r = rng.random_range(0.5..1.5);
                let ph = rng.random_range(0.0..std::f64::consts::TAU);
                Complex::from_polar(T::lit(r), T::lit(ph))
            })
            .collect();
        Ok(FourierLtiSystem { grid, wavenumbers, mu, init_amps, dt, m, seed })
    }

    /// The 128×128, K = 5, t ∈ [0, 2], dt = 0.01 configuration.
    pub fn example1(seed: u64) -> Result<Self> {
        Self::random((128, 128), 5, T::lit(0.01), 200, seed)
    }

    pub fn k(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.wavenumbers.len();
        if self.mu.len() != k || self.init_amps.len() != k || k == 0 {
            return Err(Error::Config("wavenumbers, mu and init_amps must have equal nonzero length".into()));
        }
        if self.m == 0 {
            return Err(Error::Config("need at least one snapshot pair".into()));
        }
        if !(self.dt > T::zero()) {
            return Err(Error::Config("time step must be positive".into()));
        }
        if self.mu.iter().any(|m| m.re > T::zero()) {
            return Err(Error::Config("damping must be nonpositive".into()));
        }
        let (nx, ny) = self.grid;
        let mut seen = HashSet::new();
        for &(kx, ky) in &self.wavenumbers {
            if kx <= -(nx as i64) || kx >= nx as i64 || ky <= -(ny as i64) || ky >= ny as i64 {
                return Err(Error::BadWavenumber { kx, ky, nx, ny });
            }
            let key = (kx.rem_euclid(nx as i64), ky.rem_euclid(ny as i64));
            if !seen.insert(key) {
                return Err(Error::Config(format!("wavenumber ({kx}, {ky}) repeated")));
            }
        }
        Ok(())
    }
}

/// Planted eigenvalues and modes of a generated system.
#[derive(Debug, Clone)]
pub struct GroundTruth<T: Real = f64> {
    /// `exp(μ dt)` for each atom followed by its conjugate partner.
    pub lambdas: Vec<Complex<T>>,
    pub mus: Vec<Complex<T>>,
    /// Unit-norm Fourier atoms, one column per entry of `lambdas`.
    pub modes: Matrix<Complex<T>>,
    /// Flat coefficient indices of the atoms.
    pub indices: Vec<usize>,
}

/// Generates `m + 1` real snapshots of the planted system.
pub fn generate_fourier_lti<T: Real>(sys: &FourierLtiSystem<T>) -> Result<(SnapshotPair<T>, GroundTruth<T>)> {
    sys.validate()?;
    let (nx, ny) = sys.grid;
    let psi = SparseBasis::<T>::new(nx, ny)?;
    let n = psi.len();
    let k = sys.k();
    let mut indices = Vec::with_capacity(2 * k);
    let mut atoms = Vec::with_capacity(k);
    for &(kx, ky) in &sys.wavenumbers {
        let idx = psi.wavenumber_index(kx, ky)?;
        indices.push(idx);
        atoms.push(psi.atom(idx));
    }
    let times: Vec<T> = (0..=sys.m).map(|j| T::from_usize_lossy(j) * sys.dt).collect();
    let two = T::lit(2.0);
    let cols: Vec<Vec<T>> = times
        .par_iter()
        .map(|&t| {
            let mut field = vec![T::zero(); n];
            for j in 0..k {
                let c = sys.init_amps[j] * (sys.mu[j] * t).exp();
                // c ψ_k + conj(c) ψ_{−k} = 2 Re(c ψ_k)
                for (f, a) in field.iter_mut().zip(&atoms[j]) {
                    *f += two * (c * a).re;
                }
            }
            field
        })
        .collect();
    let seq = Matrix::from_columns(n, &cols);
    let data = SnapshotPair::from_sequence(&seq, sys.dt, Some(sys.grid))?;

    let mut lambdas = Vec::with_capacity(2 * k);
    let mut mus = Vec::with_capacity(2 * k);
    let mut modes = Vec::with_capacity(2 * k);
    let conj_indices: Vec<usize> = indices.iter().map(|&i| psi.conjugate_index(i)).collect();
    for j in 0..k {
        mus.push(sys.mu[j]);
        lambdas.push((sys.mu[j] * sys.dt).exp());
        modes.push(atoms[j].clone());
    }
    for j in 0..k {
        mus.push(sys.mu[j].conj());
        lambdas.push((sys.mu[j].conj() * sys.dt).exp());
        modes.push(atoms[j].iter().map(|z| z.conj()).collect());
    }
    indices.extend(conj_indices);
    Ok((data, GroundTruth { lambdas, mus, modes: Matrix::from_columns(n, &modes), indices }))
}

/// Adds white complex Gaussian noise to every Fourier coefficient that is
/// inactive in the clean data, keeping the fields real.
///
/// The noise RMS in physical space is `rms_fraction` times the RMS of the
/// whole clean snapshot sequence. The same noisy sequence feeds both `X` and
/// `X′`.
pub fn add_fourier_noise<T: Real>(data: &SnapshotPair<T>, rms_fraction: T, seed: u64) -> Result<SnapshotPair<T>> {
    if !(rms_fraction >= T::zero() && rms_fraction <= T::one()) {
        return Err(Error::Config(format!("rms_fraction must lie in [0, 1], got {rms_fraction}")));
    }
    if rms_fraction == T::zero() {
        return Ok(data.clone());
    }
    let (nx, ny) = data.grid().ok_or_else(|| Error::Config("Fourier noise needs a grid".into()))?;
    let psi = SparseBasis::<T>::new(nx, ny)?;
    let n = psi.len();
    let seq = data.sequence();
    let signal_rms = (seq.as_slice().iter().map(|&v| v * v).sum::<T>()
        / T::from_usize_lossy(seq.as_slice().len()))
    .sqrt();

    // active support: coefficients carrying signal in any snapshot
    let mut peak = vec![T::zero(); n];
    for j in 0..seq.cols() {
        let col: Vec<Complex<T>> = seq.col(j).iter().map(|&v| Complex::new(v, T::zero())).collect();
        let coeffs = psi.apply(&col, Direction::Forward)?;
        for (p, c) in peak.iter_mut().zip(&coeffs) {
            *p = p.max(c.norm());
        }
    }
    let pmax = peak.iter().copied().fold(T::zero(), T::max);
    let active: Vec<bool> = peak.iter().map(|&p| p > T::lit(1e-8) * pmax).collect();
    let inactive = active.iter().filter(|&&a| !a).count();
    if inactive == 0 {
        return Ok(data.clone());
    }
    // unit-variance real white noise has unit-variance Fourier coefficients;
    // after removing the active ones, rescale so the spatial RMS is exact in expectation
    let sigma = rms_fraction * signal_rms * (T::from_usize_lossy(n) / T::from_usize_lossy(inactive)).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = Vec::with_capacity(seq.cols());
    for j in 0..seq.cols() {
        let w: Vec<Complex<T>> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                Complex::new(T::lit(z), T::zero())
            })
            .collect();
        let mut coeffs = psi.apply(&w, Direction::Forward)?;
        for (c, &a) in coeffs.iter_mut().zip(&active) {
            if a {
                *c = Complex::new(T::zero(), T::zero());
            }
        }
        let noise = psi.apply(&coeffs, Direction::Inverse)?;
        cols.push(seq.col(j).iter().zip(&noise).map(|(&x, e)| x + sigma * e.re).collect::<Vec<T>>());
    }
    SnapshotPair::from_sequence(&Matrix::from_columns(n, &cols), data.dt(), data.grid())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GyreObservable {
    Vorticity,
    /// `u` stacked above `v`.
    Velocity,
}

/// Double gyre on the closed domain `[0, 2] × [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleGyreParams<T: Real = f64> {
    pub amplitude: T,
    pub omega: T,
    pub eps: T,
    pub grid: (usize, usize),
    pub t0: T,
    pub t1: T,
    pub dt: T,
    pub observable: GyreObservable,
}

impl<T: Real> Default for DoubleGyreParams<T> {
    fn default() -> Self {
        DoubleGyreParams {
            amplitude: T::lit(0.1),
            omega: T::TAU() / T::lit(10.0),
            eps: T::lit(0.25),
            grid: (512, 256),
            t0: T::zero(),
            t1: T::lit(15.0),
            dt: T::lit(0.1),
            observable: GyreObservable::Vorticity,
        }
    }
}

impl<T: Real> DoubleGyreParams<T> {
    pub fn with_grid(nx: usize, ny: usize) -> Self {
        DoubleGyreParams { grid: (nx, ny), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, ny) = self.grid;
        if nx < 2 || ny < 2 {
            return Err(Error::BadDimensions(format!("gyre grid must be at least 2x2, got {nx}x{ny}")));
        }
        if !(self.dt > T::zero()) || !(self.t1 >= self.t0) {
            return Err(Error::Config("gyre needs dt > 0 and t1 >= t0".into()));
        }
        Ok(())
    }

    /// Snapshot times `t0, t0 + dt, …` up to `t1`.
    pub fn times(&self) -> Vec<T> {
        let steps = ((self.t1 - self.t0) / self.dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
        (0..=steps).map(|k| self.t0 + T::from_usize_lossy(k) * self.dt).collect()
    }

    pub fn x_coord(&self, i: usize) -> T {
        T::lit(2.0) * T::from_usize_lossy(i) / T::from_usize_lossy(self.grid.0 - 1)
    }

    pub fn y_coord(&self, j: usize) -> T {
        T::from_usize_lossy(j) / T::from_usize_lossy(self.grid.1 - 1)
    }

    /// Velocity `(u, v)` at a point.
    pub fn velocity(&self, x: T, y: T, t: T) -> (T, T) {
        let pi = T::PI();
        let s = self.eps * (self.omega * t).sin();
        let f = s * x * x + (T::one() - T::lit(2.0) * s) * x;
        let dfdx = T::lit(2.0) * s * x + T::one() - T::lit(2.0) * s;
        let u = -pi * self.amplitude * (pi * f).sin() * (pi * y).cos();
        let v = pi * self.amplitude * (pi * f).cos() * (pi * y).sin() * dfdx;
        (u, v)
    }
}

/// Gyre fields at time `t`, each nx×ny with `(i, j)` at `(x_i, y_j)`.
#[derive(Debug, Clone)]
pub struct GyreField<T: Real = f64> {
    pub u: Matrix<T>,
    pub v: Matrix<T>,
    pub vorticity: Matrix<T>,
}

/// Second-order derivative along a strided line: central in the interior,
/// one-sided second order at the ends (first order when only two points).
fn derivative_line<T: Real>(f: &[T], h: T) -> Vec<T> {
    let n = f.len();
    let mut d = vec![T::zero(); n];
    if n == 2 {
        d[0] = (f[1] - f[0]) / h;
        d[1] = d[0];
        return d;
    }
    let two_h = T::lit(2.0) * h;
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / two_h;
    }
    d[0] = (T::lit(-3.0) * f[0] + T::lit(4.0) * f[1] - f[2]) / two_h;
    d[n - 1] = (T::lit(3.0) * f[n - 1] - T::lit(4.0) * f[n - 2] + f[n - 3]) / two_h;
    d
}

/// `∂f/∂x` of an nx×ny grid field with spacing `h`.
pub fn gradient_x<T: Real>(f: &Matrix<T>, h: T) -> Matrix<T> {
    let (nx, ny) = f.shape();
    let mut out = Matrix::zeros(nx, ny);
    for j in 0..ny {
        out.col_mut(j).copy_from_slice(&derivative_line(f.col(j), h));
    }
    out
}

/// `∂f/∂y` of an nx×ny grid field with spacing `h`.
pub fn gradient_y<T: Real>(f: &Matrix<T>, h: T) -> Matrix<T> {
    let (nx, ny) = f.shape();
    let mut out = Matrix::zeros(nx, ny);
    for i in 0..nx {
        let d = derivative_line(&f.row(i), h);
        for j in 0..ny {
            out[(i, j)] = d[j];
        }
    }
    out
}

pub fn double_gyre_field<T: Real>(params: &DoubleGyreParams<T>, t: T) -> Result<GyreField<T>> {
    params.validate()?;
    let (nx, ny) = params.grid;
    let mut u = Matrix::zeros(nx, ny);
    let mut v = Matrix::zeros(nx, ny);
    for j in 0..ny {
        let y = params.y_coord(j);
        for i in 0..nx {
            let (a, b) = params.velocity(params.x_coord(i), y, t);
            u[(i, j)] = a;
            v[(i, j)] = b;
        }
    }
    let hx = params.x_coord(1);
    let hy = params.y_coord(1);
    let vorticity = gradient_x(&v, hx).sub(&gradient_y(&u, hy));
    Ok(GyreField { u, v, vorticity })
}

/// Gyre snapshots over `[t0, t1]` as a snapshot pair.
pub fn generate_gyre_snapshots<T: Real>(params: &DoubleGyreParams<T>) -> Result<SnapshotPair<T>> {
    params.validate()?;
    let times = params.times();
    if times.len() < 2 {
        return Err(Error::Config("gyre time span holds fewer than two snapshots".into()));
    }
    let cols: Vec<Vec<T>> = times
        .par_iter()
        .map(|&t| {
            let f = double_gyre_field(params, t)?;
            Ok(match params.observable {
                GyreObservable::Vorticity => f.vorticity.into_vec(),
                GyreObservable::Velocity => {
                    let mut c = f.u.into_vec();
                    c.extend(f.v.into_vec());
                    c
                }
            })
        })
        .collect::<Result<_>>()?;
    let rows = cols[0].len();
    let grid = match params.observable {
        GyreObservable::Vorticity => Some(params.grid),
        GyreObservable::Velocity => None,
    };
    SnapshotPair::from_sequence(&Matrix::from_columns(rows, &cols), params.dt, grid)
}
