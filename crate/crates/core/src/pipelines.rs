//! End-to-end experiments over the four DMD pathways, eigenvalue/mode
//! comparison and the unitary-invariance verification suite.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dmd::{compressed_dmd, exact_dmd, DmdResult, PipelinePath, SnapshotPair};
use crate::error::{Error, Result, StageExt};
use crate::linalg::{alignment, eig_dense, orthonormalize, pinv_from_svd, svd_econ, Matrix, DEFAULT_MAX_DIM};
use crate::recovery::{cosamp, recover_modes, recover_modes_l1, MeasuredBasis, RecoveredModes, RecoveryConfig};
use crate::sensing::{apply_measurement, make_measurement, mutual_coherence, Direction, MeasurementKind, MeasurementMatrix, SparseBasis};
use crate::systems::{add_fourier_noise, generate_fourier_lti, generate_gyre_snapshots, DoubleGyreParams, FourierLtiSystem, GroundTruth};

pub const REPORT_SCHEMA: &str = "csdmd-report/1";
/// Default size limits for reconstructing every snapshot (Path 2A).
pub const PATH_2A_MAX_N: usize = 4096;
pub const PATH_2A_MAX_M: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SystemSpec {
    FourierLti(FourierLtiSystem<f64>),
    DoubleGyre(DoubleGyreParams<f64>),
    /// Snapshots supplied by the caller; `source` is only echoed.
    External { source: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSpec {
    pub kind: MeasurementKind,
    pub p: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub path: PipelinePath,
    pub measurement: Option<MeasurementSpec>,
    /// Sparsity for mode or snapshot recovery; derived when absent.
    pub sparsity: Option<usize>,
    pub truncation_tol: f64,
    pub noise_rms: f64,
    pub noise_seed: u64,
    /// Recover Path 1B modes from `Φ_Y` by ℓ₁ shrinkage.
    pub l1_modes: bool,
    /// Lift the size limits on Path 2A.
    pub allow_large_2a: bool,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(system: SystemSpec, path: PipelinePath) -> Self {
        ExperimentConfig {
            system,
            path,
            measurement: None,
            sparsity: None,
            truncation_tol: crate::linalg::DEFAULT_TRUNCATION_TOL,
            noise_rms: 0.0,
            noise_seed: 0,
            l1_modes: false,
            allow_large_2a: false,
            output_dir: None,
        }
    }

    pub fn with_measurement(mut self, kind: MeasurementKind, p: usize, seed: u64) -> Self {
        self.measurement = Some(MeasurementSpec { kind, p, seed });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.path != PipelinePath::Path1A && self.measurement.is_none() {
            return Err(Error::Config(format!("{:?} needs a measurement configuration", self.path)));
        }
        if !(self.noise_rms >= 0.0 && self.noise_rms <= 1.0) {
            return Err(Error::Config(format!("noise_rms must lie in [0, 1], got {}", self.noise_rms)));
        }
        if !(self.truncation_tol >= 0.0) {
            return Err(Error::Config("truncation tolerance must be nonnegative".into()));
        }
        if self.sparsity == Some(0) {
            return Err(Error::Config("sparsity must be at least 1".into()));
        }
        Ok(())
    }
}

/// One matched eigenvalue pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub a: usize,
    pub b: usize,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenMatching {
    /// Sorted by the index into the first result.
    pub pairs: Vec<EigenPair>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
}

impl EigenMatching {
    pub fn max_abs_diff(&self) -> Option<f64> {
        self.pairs.iter().map(|p| p.abs_diff).fold(None, |m, d| Some(m.map_or(d, |m: f64| m.max(d))))
    }
}

/// Greedy nearest-neighbour pairing of two eigenvalue lists. Ties go to the
/// entry of `a` with the larger weight.
pub fn match_eigenvalues(a: &[Complex64], b: &[Complex64], weights_a: Option<&[f64]>) -> EigenMatching {
    let mut cand = Vec::with_capacity(a.len() * b.len());
    for (i, la) in a.iter().enumerate() {
        for (j, lb) in b.iter().enumerate() {
            cand.push((i, j, (la - lb).norm()));
        }
    }
    let w = |i: usize| weights_a.map_or(0.0, |w| w[i]);
    cand.sort_by(|x, y| {
        x.2.partial_cmp(&y.2)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(w(y.0).partial_cmp(&w(x.0)).unwrap_or(std::cmp::Ordering::Equal))
            .then(x.0.cmp(&y.0))
            .then(x.1.cmp(&y.1))
    });
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = Vec::new();
    for (i, j, d) in cand {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push(EigenPair { a: i, b: j, abs_diff: d });
        }
    }
    pairs.sort_by_key(|p| p.a);
    EigenMatching {
        pairs,
        unmatched_a: (0..a.len()).filter(|&i| !used_a[i]).collect(),
        unmatched_b: (0..b.len()).filter(|&j| !used_b[j]).collect(),
    }
}

/// Pairs the eigenvalues of two DMD results.
pub fn match_eigen(a: &DmdResult<f64>, b: &DmdResult<f64>) -> EigenMatching {
    let w: Vec<f64> = a.amplitudes.iter().map(|z| z.norm()).collect();
    match_eigenvalues(&a.lambdas, &b.lambdas, Some(&w))
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub lambda_reference: [f64; 2],
    pub lambda_computed: [f64; 2],
    pub abs_diff: f64,
    /// Alignment of the paired modes, when both live in the same space.
    pub alignment: Option<f64>,
}

/// Eigenvalue table of a computed result against a reference.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub eigen_table: Vec<EigenRow>,
    pub mode_alignment: Vec<f64>,
    pub unmatched_reference: Vec<[f64; 2]>,
    pub unmatched_computed: Vec<[f64; 2]>,
    pub max_abs_diff: Option<f64>,
    pub min_alignment: Option<f64>,
}

/// Compares eigenvalues and, where dimensions agree, mode columns.
pub fn compare_spectra(
    ref_lambdas: &[Complex64],
    ref_modes: Option<&Matrix<Complex64>>,
    ref_weights: Option<&[f64]>,
    lambdas: &[Complex64],
    modes: Option<&Matrix<Complex64>>,
) -> Comparison {
    let m = match_eigenvalues(ref_lambdas, lambdas, ref_weights);
    let same_space = matches!((ref_modes, modes), (Some(a), Some(b)) if a.rows() == b.rows());
    let mut rows = Vec::with_capacity(m.pairs.len());
    let mut align = Vec::new();
    for p in &m.pairs {
        let al = if same_space {
            let s = alignment(ref_modes.unwrap().col(p.a), modes.unwrap().col(p.b));
            align.push(s);
            Some(s)
        } else {
            None
        };
        rows.push(EigenRow {
            lambda_reference: pair(ref_lambdas[p.a]),
            lambda_computed: pair(lambdas[p.b]),
            abs_diff: p.abs_diff,
            alignment: al,
        });
    }
    let min_alignment = align.iter().copied().fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))));
    Comparison {
        max_abs_diff: m.max_abs_diff(),
        min_alignment,
        eigen_table: rows,
        mode_alignment: align,
        unmatched_reference: m.unmatched_a.iter().map(|&i| pair(ref_lambdas[i])).collect(),
        unmatched_computed: m.unmatched_b.iter().map(|&j| pair(lambdas[j])).collect(),
    }
}

/// Compares two DMD results.
pub fn compare_results(reference: &DmdResult<f64>, computed: &DmdResult<f64>) -> Comparison {
    let w: Vec<f64> = reference.amplitudes.iter().map(|z| z.norm()).collect();
    compare_spectra(&reference.lambdas, Some(&reference.phi), Some(&w), &computed.lambdas, Some(&computed.phi))
}

/// Compares a result with the planted eigenvalues and modes.
pub fn compare_truth(truth: &GroundTruth<f64>, computed: &DmdResult<f64>) -> Comparison {
    compare_spectra(&truth.lambdas, Some(&truth.modes), None, &computed.lambdas, Some(&computed.phi))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ranks {
    pub full: Option<usize>,
    pub projected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub path: Option<PipelinePath>,
    pub config: serde_json::Value,
    pub ranks: Ranks,
    pub eigenvalues: Vec<[f64; 2]>,
    pub omegas: Vec<[f64; 2]>,
    /// Computed result against the full-data reference.
    pub reference: Option<Comparison>,
    /// Computed result against planted ground truth.
    pub truth: Option<Comparison>,
    pub recovery_residuals: Vec<Option<f64>>,
    pub recovery_failures: Vec<String>,
    pub coherence: Option<f64>,
    /// Seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn empty() -> Self {
        ExperimentReport {
            schema: REPORT_SCHEMA.to_string(),
            path: None,
            config: serde_json::Value::Null,
            ranks: Ranks::default(),
            eigenvalues: Vec::new(),
            omegas: Vec::new(),
            reference: None,
            truth: None,
            recovery_residuals: Vec::new(),
            recovery_failures: Vec::new(),
            coherence: None,
            timings: BTreeMap::new(),
        }
    }
}

/// Report plus the numerical objects behind it.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub reference: Option<DmdResult<f64>>,
    pub result: DmdResult<f64>,
    pub measurement: Option<MeasurementMatrix<f64>>,
    pub recovered: Option<RecoveredModes<f64>>,
}

/// Synthetic data for a configured system.
pub fn generate_system(system: &SystemSpec) -> Result<(SnapshotPair<f64>, Option<GroundTruth<f64>>)> {
    match system {
        SystemSpec::FourierLti(sys) => {
            let (d, t) = generate_fourier_lti(sys)?;
            Ok((d, Some(t)))
        }
        SystemSpec::DoubleGyre(p) => Ok((generate_gyre_snapshots(p)?, None)),
        SystemSpec::External { source } => {
            Err(Error::Config(format!("external system '{source}' must be supplied as data")))
        }
    }
}

/// Generates the configured system (with noise) and runs the pathway.
pub fn run_path(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let t = Instant::now();
    let (data, truth) = generate_system(&cfg.system).stage("generate")?;
    let data = if cfg.noise_rms > 0.0 {
        add_fourier_noise(&data, cfg.noise_rms, cfg.noise_seed).stage("noise")?
    } else {
        data
    };
    let gen = t.elapsed().as_secs_f64();
    let mut out = run_path_on(cfg, &data, truth.as_ref())?;
    out.report.timings.insert("generate".into(), gen);
    Ok(out)
}

fn default_sparsity(cfg: &ExperimentConfig, truth: Option<&GroundTruth<f64>>, p: usize, per_snapshot: bool) -> usize {
    if let Some(k) = cfg.sparsity {
        return k;
    }
    match truth {
        // each mode is a single atom; each snapshot holds every atom
        Some(t) if per_snapshot => t.lambdas.len(),
        Some(t) => t.lambdas.len() / 2,
        None => p.div_ceil(3),
    }
}

/// Runs the configured pathway on full-state data, always computing the
/// exact-DMD reference alongside.
pub fn run_path_on(cfg: &ExperimentConfig, data: &SnapshotPair<f64>, truth: Option<&GroundTruth<f64>>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut timings = BTreeMap::new();
    let tol = cfg.truncation_tol;

    let t = Instant::now();
    let reference = exact_dmd(data, tol).stage("reference dmd")?;
    timings.insert("reference_dmd".to_string(), t.elapsed().as_secs_f64());

    let measurement = match cfg.measurement {
        Some(m) if cfg.path != PipelinePath::Path1A => {
            Some(make_measurement::<f64>(m.kind, m.p, data.n(), m.seed).stage("measurement")?)
        }
        _ => None,
    };
    let psi = match data.grid() {
        Some((nx, ny)) => Some(SparseBasis::<f64>::new(nx, ny)?),
        None => None,
    };
    let coherence = match (&measurement, &psi) {
        (Some(c), Some(psi)) => Some(mutual_coherence(c, psi).stage("coherence")?),
        _ => None,
    };

    let mut recovered = None;
    let mut projected_rank = None;
    let result = match cfg.path {
        PipelinePath::Path1A => reference.clone(),
        PipelinePath::Path1B => {
            let c = measurement.as_ref().expect("validated");
            let t = Instant::now();
            let r = compressed_dmd(data, c, tol).stage("compressed dmd")?;
            timings.insert("compressed_dmd".to_string(), t.elapsed().as_secs_f64());
            projected_rank = Some(r.rank);
            if cfg.l1_modes {
                let psi = psi.as_ref().ok_or_else(|| Error::Config("l1 mode recovery needs a grid".into()))?;
                let t = Instant::now();
                let y = data.transform(|x| apply_measurement(c, x).expect("dimensions checked"), None)?;
                let proj = exact_dmd(&y, tol).stage("projected dmd")?;
                let rec = recover_modes_l1(&proj, c, psi, 1e-6).stage("l1 mode recovery")?;
                timings.insert("mode_recovery".to_string(), t.elapsed().as_secs_f64());
                let res = DmdResult { phi: rec.modes.clone(), ..proj };
                recovered = Some(rec);
                res
            } else {
                r
            }
        }
        PipelinePath::Path2B => {
            let c = measurement.as_ref().expect("validated");
            let psi = psi.as_ref().ok_or_else(|| Error::Config("mode recovery needs a grid".into()))?;
            let y = data.transform(|x| apply_measurement(c, x).expect("dimensions checked"), None)?;
            let k = default_sparsity(cfg, truth, c.p(), false);
            let (res, rec, dmd_secs, rec_secs) = compressive_sampling_dmd(&y, c, psi, k, tol)?;
            timings.insert("projected_dmd".to_string(), dmd_secs);
            timings.insert("mode_recovery".to_string(), rec_secs);
            projected_rank = Some(res.rank);
            recovered = Some(rec);
            res
        }
        PipelinePath::Path2A => {
            let c = measurement.as_ref().expect("validated");
            let psi = psi.as_ref().ok_or_else(|| Error::Config("snapshot recovery needs a grid".into()))?;
            if !cfg.allow_large_2a && (data.n() > PATH_2A_MAX_N || data.m() > PATH_2A_MAX_M) {
                return Err(Error::Config(format!(
                    "snapshot reconstruction limited to n <= {PATH_2A_MAX_N}, m <= {PATH_2A_MAX_M}; got n = {}, m = {}",
                    data.n(),
                    data.m()
                )));
            }
            let k = default_sparsity(cfg, truth, c.p(), true);
            let t = Instant::now();
            let y_seq = apply_measurement(c, &data.sequence())?;
            let rebuilt = reconstruct_snapshots(&y_seq, c, psi, k).stage("snapshot recovery")?;
            timings.insert("snapshot_recovery".to_string(), t.elapsed().as_secs_f64());
            let pair = SnapshotPair::from_sequence(&rebuilt, data.dt(), data.grid())?;
            let t = Instant::now();
            let r = exact_dmd(&pair, tol).stage("dmd on recovered snapshots")?;
            timings.insert("dmd".to_string(), t.elapsed().as_secs_f64());
            r
        }
    };

    let mut report = ExperimentReport::empty();
    report.path = Some(cfg.path);
    report.config = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    report.ranks = Ranks { full: Some(reference.rank), projected: projected_rank };
    report.eigenvalues = result.lambdas.iter().map(|&z| pair(z)).collect();
    report.omegas = result.omegas.iter().map(|&z| pair(z)).collect();
    report.reference = Some(compare_results(&reference, &result));
    report.truth = truth.map(|t| compare_truth(t, &result));
    if let Some(rec) = &recovered {
        report.recovery_residuals = rec.residuals();
        report.recovery_failures = rec.per_mode.iter().filter_map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
    }
    report.coherence = coherence;
    report.timings = timings;
    Ok(ExperimentOutcome { report, reference: Some(reference), result, measurement, recovered })
}

/// Path 2B on measured data only: DMD of `(Y, Y′)` followed by sparse
/// recovery of every mode. Returns the result with full-state modes, the
/// per-mode diagnostics and the two stage times.
pub fn compressive_sampling_dmd(
    y: &SnapshotPair<f64>,
    c: &MeasurementMatrix<f64>,
    psi: &SparseBasis<f64>,
    sparsity: usize,
    tol: f64,
) -> Result<(DmdResult<f64>, RecoveredModes<f64>, f64, f64)> {
    let t = Instant::now();
    let proj = exact_dmd(y, tol).stage("projected dmd")?;
    let dmd_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let rec = recover_modes(&proj, c, psi, &RecoveryConfig::new(sparsity)).stage("mode recovery")?;
    let rec_secs = t.elapsed().as_secs_f64();
    Ok((DmdResult { phi: rec.modes.clone(), ..proj }, rec, dmd_secs, rec_secs))
}

/// Rebuilds every full snapshot from its measurements by CoSaMP and keeps
/// the real part.
pub fn reconstruct_snapshots(
    y_seq: &Matrix<f64>,
    c: &MeasurementMatrix<f64>,
    psi: &SparseBasis<f64>,
    sparsity: usize,
) -> Result<Matrix<f64>> {
    use rayon::prelude::*;
    let op = MeasuredBasis::new(c, psi)?;
    let cfg = RecoveryConfig::new(sparsity);
    let cols: Vec<Vec<f64>> = (0..y_seq.cols())
        .into_par_iter()
        .map(|j| {
            let yj: Vec<Complex64> = y_seq.col(j).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let m = cosamp(&op, &yj, &cfg).map_err(|e| e.at_stage(&format!("snapshot {j}")))?;
            Ok(psi.apply(&m.coeffs, Direction::Inverse)?.iter().map(|z| z.re).collect())
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_columns(psi.len(), &cols))
}

/// Wall-clock seconds for the SVD + eigendecomposition stage on full and
/// compressed data, each the median of `repeats` runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub full_secs: f64,
    pub compressed_secs: f64,
    pub ratio: f64,
}

fn dmd_stage<E: crate::scalar::Scalar<Real = f64>>(x: &Matrix<E>, xp: &Matrix<E>, tol: f64) -> Result<()> {
    let svd = svd_econ(x, tol)?;
    let vsig = svd.v.scale_columns(&svd.sigma_inv());
    let atilde = svd.u.adjoint_mul(&xp.mul_promote(&vsig));
    eig_dense(&atilde, DEFAULT_MAX_DIM)?;
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

pub fn time_dmd_stages(data: &SnapshotPair<f64>, c: &MeasurementMatrix<f64>, tol: f64, repeats: usize) -> Result<StageTiming> {
    let y = apply_measurement(c, data.x())?;
    let yp = apply_measurement(c, data.xp())?;
    let mut full = Vec::new();
    let mut comp = Vec::new();
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        dmd_stage(data.x(), data.xp(), tol)?;
        full.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        dmd_stage(&y, &yp, tol)?;
        comp.push(t.elapsed().as_secs_f64());
    }
    let (f, c) = (median(full), median(comp));
    Ok(StageTiming { full_secs: f, compressed_secs: c, ratio: f / c.max(f64::MIN_POSITIVE) })
}

/// Outcome of one invariance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    pub name: String,
    /// Largest deviation of matched eigenvalues.
    pub eigen_deviation: f64,
    /// Largest `1 − alignment` between transformed and expected modes, or
    /// the relative residual for the operator relation.
    pub mode_deviation: f64,
    pub eigen_tol: f64,
    pub mode_tol: f64,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InvarianceLedger {
    pub checks: Vec<InvarianceCheck>,
}

impl InvarianceLedger {
    pub fn all_passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&InvarianceCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const INVARIANCE_EIGEN_TOL: f64 = 1e-10;
pub const INVARIANCE_MODE_TOL: f64 = 1e-8;
pub const LEMMA_TOL: f64 = 1e-8;

/// Random m×m unitary matrix from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(m: usize, seed: u64) -> Matrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Matrix::from_fn(m, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    orthonormalize(&g)
}

/// Random permutation of `0..m`.
pub fn random_permutation(m: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<usize> = (0..m).collect();
    p.shuffle(&mut rng);
    p
}

fn check(
    name: &str,
    base: &DmdResult<f64>,
    other: &DmdResult<f64>,
    expected_modes: &Matrix<Complex64>,
    note: Option<String>,
) -> InvarianceCheck {
    let m = match_eigen(base, other);
    let mut eig_dev = m.max_abs_diff().unwrap_or(f64::INFINITY);
    let mut mode_dev: f64 = 0.0;
    for p in &m.pairs {
        mode_dev = mode_dev.max(1.0 - alignment(expected_modes.col(p.a), other.phi.col(p.b)));
    }
    if !m.unmatched_a.is_empty() || !m.unmatched_b.is_empty() {
        eig_dev = f64::INFINITY;
    }
    InvarianceCheck {
        name: name.to_string(),
        eigen_deviation: eig_dev,
        mode_deviation: mode_dev,
        eigen_tol: INVARIANCE_EIGEN_TOL,
        mode_tol: INVARIANCE_MODE_TOL,
        passed: eig_dev <= INVARIANCE_EIGEN_TOL && mode_dev <= INVARIANCE_MODE_TOL,
        note,
    }
}

/// `A = X′ X⁺` formed explicitly.
pub fn dmd_operator<E: crate::scalar::Scalar<Real = f64>>(x: &Matrix<E>, xp: &Matrix<E>, tol: f64) -> Result<Matrix<Complex64>> {
    let svd = svd_econ(x, tol)?;
    Ok(xp.mul_promote(&pinv_from_svd(&svd)))
}

/// `‖C A_X − A_Y C‖_F / ‖C A_X‖_F` with `Y = C X`.
pub fn lemma_residual(x: &Matrix<Complex64>, xp: &Matrix<Complex64>, c: &Matrix<Complex64>, tol: f64) -> Result<f64> {
    let ax = dmd_operator(x, xp, tol)?;
    let y = c.mul(x);
    let yp = c.mul(xp);
    let ay = dmd_operator(&y, &yp, tol)?;
    let cax = c.mul(&ax);
    let ayc = ay.mul(c);
    Ok(cax.sub(&ayc).fro_norm() / cax.fro_norm())
}

/// Gaussian p×n matrix for the operator-relation witness.
pub fn gaussian_matrix(p: usize, n: usize, seed: u64) -> Matrix<Complex64> {
    let c = make_measurement::<f64>(MeasurementKind::Gaussian, p.min(n), n, seed).map(|c| c.to_dense());
    match c {
        Ok(c) if p <= n => c.to_complex(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = (p as f64).sqrt().recip();
            Matrix::from_fn(p, n, |_, _| {
                let z: f64 = rng.sample(StandardNormal);
                Complex64::new(z * s, 0.0)
            })
        }
    }
}

/// Runs exact DMD under right permutations, a random right unitary, the
/// left DFT and the left POD projection, and checks the operator relation
/// `C A_X = A_Y C` on a small full-row-rank sub-instance.
pub fn verify_invariance_suite(data: &SnapshotPair<f64>, seed: u64) -> Result<InvarianceLedger> {
    let tol = crate::linalg::DEFAULT_TRUNCATION_TOL;
    let base = exact_dmd(data, tol).stage("reference dmd")?;
    let m = data.m();
    let mut checks = Vec::new();
    let xc = data.x().to_complex();
    let xpc = data.xp().to_complex();

    // column permutation, random and reversal
    for (name, perm) in [
        ("column_permutation", random_permutation(m, seed)),
        ("column_reversal", (0..m).rev().collect::<Vec<_>>()),
    ] {
        let d = SnapshotPair::new(data.x().select_columns(&perm), data.xp().select_columns(&perm), data.dt(), data.grid())?;
        let r = exact_dmd(&d, tol).stage(name)?;
        checks.push(check(name, &base, &r, &base.phi, None));
    }

    // random right unitary
    let p = random_unitary(m, seed.wrapping_add(1));
    let d = SnapshotPair::new(xc.mul(&p), xpc.mul(&p), data.dt(), data.grid())?;
    let r = exact_dmd(&d, tol).stage("right_unitary")?;
    checks.push(check("right_unitary", &base, &r, &base.phi, None));

    // left DFT
    let (nx, ny) = data.grid().unwrap_or((data.n(), 1));
    let psi = SparseBasis::<f64>::new(nx, ny)?;
    let d = SnapshotPair::new(
        psi.apply_columns(&xc, Direction::Forward)?,
        psi.apply_columns(&xpc, Direction::Forward)?,
        data.dt(),
        None,
    )?;
    let r = exact_dmd(&d, tol).stage("left_dft")?;
    let expected = psi.apply_columns(&base.phi, Direction::Forward)?;
    checks.push(check("left_dft", &base, &r, &expected, None));

    // left POD projection onto the data's left singular vectors
    let uh = base.svd.u.adjoint();
    let d = SnapshotPair::new(uh.mul(&xc), uh.mul(&xpc), data.dt(), None)?;
    let r = exact_dmd(&d, tol).stage("left_pod")?;
    let expected = uh.mul(&base.phi);
    checks.push(check(
        "left_pod",
        &base,
        &r,
        &expected,
        Some("POD coordinates Uᴴ, an isometry on the range of X".into()),
    ));

    // operator relation on POD coordinates, which have full row rank
    let r_sub = base.rank.min(32);
    let idx: Vec<usize> = (0..r_sub).collect();
    let us = base.svd.u.select_columns(&idx).adjoint();
    let zx = us.mul(&xc);
    let zxp = us.mul(&xpc);
    let mut worst: f64 = 0.0;
    for trial in 0..10u64 {
        let c = gaussian_matrix(r_sub, r_sub, seed.wrapping_add(100 + trial));
        worst = worst.max(lemma_residual(&zx, &zxp, &c, tol)?);
    }
    checks.push(InvarianceCheck {
        name: "operator_relation".into(),
        eigen_deviation: 0.0,
        mode_deviation: worst,
        eigen_tol: INVARIANCE_EIGEN_TOL,
        mode_tol: LEMMA_TOL,
        passed: worst <= LEMMA_TOL,
        note: Some(format!("{r_sub}-dimensional POD sub-instance, 10 Gaussian C")),
    });
    Ok(InvarianceLedger { checks })
}
