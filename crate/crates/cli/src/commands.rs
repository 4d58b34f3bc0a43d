//! Subcommand definitions and their execution.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use csdmd::dmd::{exact_dmd, DmdResult, PipelinePath, SnapshotPair};
use csdmd::error::{Error, Result, StageExt};
use csdmd::linalg::{Matrix, DEFAULT_TRUNCATION_TOL};
use csdmd::pipelines::{
    compare_spectra, compressive_sampling_dmd, reconstruct_snapshots, run_path_on, verify_invariance_suite,
    ExperimentConfig, ExperimentReport, Ranks, SystemSpec, PATH_2A_MAX_M, PATH_2A_MAX_N,
};
use csdmd::sensing::{make_measurement, mutual_coherence, MeasurementKind, MeasurementMatrix, SparseBasis};
use csdmd::systems::{
    add_fourier_noise, generate_fourier_lti, generate_gyre_snapshots, DoubleGyreParams, FourierLtiSystem,
    GroundTruth, GyreObservable,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::io::{export_report, read_json, read_matrix, write_matrix, write_mode_image, MatrixData};

#[derive(Debug, Parser)]
#[command(name = "csdmd", version, about = "Dynamic mode decomposition from full, compressed or subsampled snapshots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic snapshot data.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Exact DMD on full-state snapshots.
    Dmd(DmdArgs),
    /// Compressed DMD: measure, decompose, rebuild full-state modes.
    Cdmd(CdmdArgs),
    /// Compressive-sampling DMD on measured data with sparse mode recovery.
    Csdmd(CsdmdArgs),
    /// Compare the eigenvalues and modes of two result directories.
    Compare(CompareArgs),
    /// Run the unitary-invariance suite on a snapshot set.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Sparse-Fourier linear system.
    Example1(Example1Args),
    /// Double gyre flow.
    Gyre(GyreArgs),
}

#[derive(Debug, Args)]
pub struct Example1Args {
    #[arg(long, default_value_t = 128)]
    pub nx: usize,
    #[arg(long, default_value_t = 128)]
    pub ny: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fourier-domain noise RMS relative to the signal RMS.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GyreArgs {
    #[arg(long, default_value_t = 512)]
    pub nx: usize,
    #[arg(long, default_value_t = 256)]
    pub ny: usize,
    #[arg(long, default_value_t = 0.1)]
    pub amp: f64,
    #[arg(long, default_value_t = 0.6283185307)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 15.0)]
    pub t1: f64,
    /// Stack velocity components instead of vorticity.
    #[arg(long)]
    pub velocity: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DmdArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write imaginary-part mode images.
    #[arg(long)]
    pub imag: bool,
}

#[derive(Debug, Args)]
pub struct CdmdArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    #[arg(long)]
    pub measure: MeasurementKind,
    #[arg(short = 'p')]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION_TOL)]
    pub tol: f64,
    /// Recover modes from the projected modes by l1 shrinkage.
    #[arg(long)]
    pub l1_modes: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub imag: bool,
}

#[derive(Debug, Args)]
pub struct CsdmdArgs {
    /// Directory holding `measured.bin/json`.
    #[arg(long)]
    pub measured: PathBuf,
    #[arg(long)]
    pub measure_file: PathBuf,
    #[arg(long, default_value = "dft")]
    pub basis: String,
    #[arg(long)]
    pub sparsity: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION_TOL)]
    pub tol: f64,
    /// Rebuild every snapshot before the decomposition (small instances).
    #[arg(long)]
    pub reconstruct_snapshots: bool,
    /// Lift the size limit on snapshot reconstruction.
    #[arg(long)]
    pub allow_large: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub imag: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the ledger as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Planted quantities stored next to generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub grid: [usize; 2],
    pub lambdas: Vec<[f64; 2]>,
    pub mus: Vec<[f64; 2]>,
    pub indices: Vec<usize>,
}

impl TruthFile {
    fn from_truth(t: &GroundTruth<f64>, grid: (usize, usize)) -> Self {
        TruthFile {
            grid: [grid.0, grid.1],
            lambdas: t.lambdas.iter().map(|z| [z.re, z.im]).collect(),
            mus: t.mus.iter().map(|z| [z.re, z.im]).collect(),
            indices: t.indices.clone(),
        }
    }

    fn to_truth(&self) -> Result<GroundTruth<f64>> {
        let psi = SparseBasis::<f64>::new(self.grid[0], self.grid[1])?;
        let cols: Vec<Vec<Complex64>> = self.indices.iter().map(|&i| psi.atom(i)).collect();
        let c = |v: &[f64; 2]| Complex64::new(v[0], v[1]);
        Ok(GroundTruth {
            lambdas: self.lambdas.iter().map(c).collect(),
            mus: self.mus.iter().map(c).collect(),
            modes: Matrix::from_columns(psi.len(), &cols),
            indices: self.indices.clone(),
        })
    }
}

/// Parameters that regenerate a measurement matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub kind: MeasurementKind,
    pub p: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels: Option<Vec<usize>>,
}

const SNAPSHOTS: &str = "snapshots";
const MEASURED: &str = "measured";
const TRUTH: &str = "truth.json";
const SYSTEM: &str = "system.json";
const MEASUREMENT: &str = "measurement.json";
const REPORT: &str = "report.json";
const MAX_MODE_IMAGES: usize = 32;

fn load_snapshots(dir: &Path, name: &str) -> Result<SnapshotPair<f64>> {
    let base = dir.join(name);
    let (data, meta) = read_matrix(&base)?;
    let seq = data.into_real(&base)?;
    let dt = meta.dt.unwrap_or(1.0);
    SnapshotPair::from_sequence(&seq, dt, meta.grid.map(|[a, b]| (a, b)))
}

fn save_snapshots(dir: &Path, name: &str, data: &SnapshotPair<f64>) -> Result<()> {
    write_matrix(&dir.join(name), &MatrixData::Real(data.sequence()), data.grid(), Some(data.dt()))
}

fn load_truth(dir: &Path) -> Result<Option<GroundTruth<f64>>> {
    let p = dir.join(TRUTH);
    if !p.exists() {
        return Ok(None);
    }
    let t: TruthFile = read_json(&p)?;
    t.to_truth().map(Some)
}

fn column(v: &[Complex64]) -> MatrixData {
    MatrixData::Complex(Matrix::column_vector(v.to_vec()))
}

fn save_result(out: &Path, r: &DmdResult<f64>, grid: Option<(usize, usize)>, imag: bool) -> Result<()> {
    write_matrix(&out.join("lambdas"), &column(&r.lambdas), None, Some(r.dt))?;
    write_matrix(&out.join("omegas"), &column(&r.omegas), None, Some(r.dt))?;
    write_matrix(&out.join("amplitudes"), &column(&r.amplitudes), None, None)?;
    let grid = grid.filter(|(a, b)| a * b == r.phi.rows());
    write_matrix(&out.join("modes"), &MatrixData::Complex(r.phi.clone()), grid, Some(r.dt))?;
    if let Some(g) = grid {
        for k in 0..r.phi.cols().min(MAX_MODE_IMAGES) {
            write_mode_image(&out.join("images").join(format!("mode_{k:03}_re")), r.phi.col(k), g, false)?;
            if imag {
                write_mode_image(&out.join("images").join(format!("mode_{k:03}_im")), r.phi.col(k), g, true)?;
            }
        }
    }
    Ok(())
}

struct LoadedResult {
    lambdas: Vec<Complex64>,
    modes: Option<Matrix<Complex64>>,
    weights: Option<Vec<f64>>,
}

fn load_result(dir: &Path) -> Result<LoadedResult> {
    let lambdas = read_matrix(&dir.join("lambdas"))?.0.into_complex().into_vec();
    let modes = if dir.join("modes.json").exists() { Some(read_matrix(&dir.join("modes"))?.0.into_complex()) } else { None };
    let weights = if dir.join("amplitudes.json").exists() {
        Some(read_matrix(&dir.join("amplitudes"))?.0.into_complex().as_slice().iter().map(|z| z.norm()).collect())
    } else {
        None
    };
    Ok(LoadedResult { lambdas, modes, weights })
}

fn gen_example1(a: &Example1Args) -> Result<String> {
    if !(a.dt > 0.0) || !(a.t1 > 0.0) {
        return Err(Error::Config("dt and t1 must be positive".into()));
    }
    let m = (a.t1 / a.dt).round() as usize;
    let sys = FourierLtiSystem::<f64>::random((a.nx, a.ny), a.k, a.dt, m, a.seed)?;
    let (data, truth) = generate_fourier_lti(&sys).stage("generate")?;
    let data = add_fourier_noise(&data, a.noise, a.noise_seed).stage("noise")?;
    save_snapshots(&a.out, SNAPSHOTS, &data)?;
    export_report(&TruthFile::from_truth(&truth, (a.nx, a.ny)), &a.out.join(TRUTH))?;
    export_report(&SystemSpec::FourierLti(sys), &a.out.join(SYSTEM))?;
    Ok(format!("wrote {}x{} snapshots to {}", data.n(), data.m() + 1, a.out.display()))
}

fn gen_gyre(a: &GyreArgs) -> Result<String> {
    let params = DoubleGyreParams {
        amplitude: a.amp,
        omega: a.omega,
        eps: a.eps,
        grid: (a.nx, a.ny),
        t0: a.t0,
        t1: a.t1,
        dt: a.dt,
        observable: if a.velocity { GyreObservable::Velocity } else { GyreObservable::Vorticity },
    };
    let data = generate_gyre_snapshots(&params).stage("generate")?;
    save_snapshots(&a.out, SNAPSHOTS, &data)?;
    export_report(&SystemSpec::DoubleGyre(params), &a.out.join(SYSTEM))?;
    Ok(format!("wrote {}x{} snapshots to {}", data.n(), data.m() + 1, a.out.display()))
}

fn external(dir: &Path, path: PipelinePath) -> ExperimentConfig {
    ExperimentConfig::new(SystemSpec::External { source: dir.display().to_string() }, path)
}

fn summary(report: &ExperimentReport) -> String {
    let mut s = format!("rank {:?}", report.ranks.full.or(report.ranks.projected).unwrap_or(0));
    if let Some(c) = report.truth.as_ref() {
        if let Some(d) = c.max_abs_diff {
            s.push_str(&format!(", max |dlambda| vs truth {d:.3e}"));
        }
        if let Some(a) = c.min_alignment {
            s.push_str(&format!(", min alignment vs truth {a:.6}"));
        }
    }
    s
}

fn run_dmd(a: &DmdArgs) -> Result<String> {
    let data = load_snapshots(&a.snapshots, SNAPSHOTS)?;
    let truth = load_truth(&a.snapshots)?;
    let mut cfg = external(&a.snapshots, PipelinePath::Path1A);
    cfg.truncation_tol = a.tol;
    cfg.output_dir = Some(a.out.clone());
    let out = run_path_on(&cfg, &data, truth.as_ref())?;
    save_result(&a.out, &out.result, data.grid(), a.imag)?;
    export_report(&out.report, &a.out.join(REPORT))?;
    Ok(summary(&out.report))
}

fn measurement_file(c: &MeasurementMatrix<f64>, grid: Option<(usize, usize)>) -> MeasurementFile {
    MeasurementFile {
        kind: c.kind(),
        p: c.p(),
        n: c.n(),
        seed: c.seed(),
        grid: grid.map(|(a, b)| [a, b]),
        pixels: c.pixels().map(|p| p.to_vec()),
    }
}

fn run_cdmd(a: &CdmdArgs) -> Result<String> {
    let data = load_snapshots(&a.snapshots, SNAPSHOTS)?;
    let truth = load_truth(&a.snapshots)?;
    let mut cfg = external(&a.snapshots, PipelinePath::Path1B).with_measurement(a.measure, a.p, a.seed);
    cfg.truncation_tol = a.tol;
    cfg.l1_modes = a.l1_modes;
    cfg.output_dir = Some(a.out.clone());
    let out = run_path_on(&cfg, &data, truth.as_ref())?;
    save_result(&a.out, &out.result, data.grid(), a.imag)?;
    export_report(&out.report, &a.out.join(REPORT))?;
    // measured data for a later compressive-sampling run
    let c = out.measurement.as_ref().expect("compressed path builds a measurement");
    let y = csdmd::sensing::apply_measurement(c, &data.sequence())?;
    write_matrix(&a.out.join(MEASURED), &MatrixData::Real(y), None, Some(data.dt()))?;
    export_report(&measurement_file(c, data.grid()), &a.out.join(MEASUREMENT))?;
    Ok(summary(&out.report))
}

fn run_csdmd(a: &CsdmdArgs) -> Result<String> {
    if a.basis != "dft" {
        return Err(Error::Config(format!("unknown basis '{}'; only 'dft' is available", a.basis)));
    }
    let y = load_snapshots(&a.measured, MEASURED)?;
    let mf: MeasurementFile = read_json(&a.measure_file)?;
    let [nx, ny] = mf.grid.ok_or_else(|| Error::Config("measurement file lacks a grid".into()))?;
    let c = make_measurement::<f64>(mf.kind, mf.p, mf.n, mf.seed)?;
    if let (Some(want), Some(got)) = (&mf.pixels, c.pixels()) {
        if want.as_slice() != got {
            return Err(Error::Format {
                path: a.measure_file.display().to_string(),
                msg: "pixel list does not match the seeded measurement".into(),
            });
        }
    }
    if y.n() != c.p() {
        return Err(Error::Dimension(format!("measured data has {} rows, measurement has p = {}", y.n(), c.p())));
    }
    let psi = SparseBasis::<f64>::new(nx, ny)?;
    let sparsity = a.sparsity.unwrap_or(c.p().div_ceil(3));
    let mut report = ExperimentReport::empty();
    report.coherence = Some(mutual_coherence(&c, &psi)?);
    let result = if a.reconstruct_snapshots {
        if !a.allow_large && (psi.len() > PATH_2A_MAX_N || y.m() > PATH_2A_MAX_M) {
            return Err(Error::Config(format!(
                "snapshot reconstruction limited to n <= {PATH_2A_MAX_N}, m <= {PATH_2A_MAX_M}; pass --allow-large to override"
            )));
        }
        let t = std::time::Instant::now();
        let rebuilt = reconstruct_snapshots(&y.sequence(), &c, &psi, sparsity).stage("snapshot recovery")?;
        report.timings.insert("snapshot_recovery".into(), t.elapsed().as_secs_f64());
        let pair = SnapshotPair::from_sequence(&rebuilt, y.dt(), Some((nx, ny)))?;
        save_snapshots(&a.out, SNAPSHOTS, &pair)?;
        report.path = Some(PipelinePath::Path2A);
        let r = exact_dmd(&pair, a.tol).stage("dmd on recovered snapshots")?;
        report.ranks = Ranks { full: Some(r.rank), projected: None };
        r
    } else {
        let (r, rec, t_dmd, t_rec) = compressive_sampling_dmd(&y, &c, &psi, sparsity, a.tol)?;
        report.path = Some(PipelinePath::Path2B);
        report.timings.insert("projected_dmd".into(), t_dmd);
        report.timings.insert("mode_recovery".into(), t_rec);
        report.recovery_residuals = rec.residuals();
        report.recovery_failures = rec.per_mode.iter().filter_map(|r| r.as_ref().err().map(|e| e.to_string())).collect();
        report.ranks = Ranks { full: None, projected: Some(r.rank) };
        r
    };
    report.config = serde_json::json!({
        "basis": a.basis,
        "measured": a.measured.display().to_string(),
        "measurement": serde_json::to_value(&mf).unwrap_or_default(),
        "sparsity": sparsity,
        "truncation_tol": a.tol,
    });
    report.eigenvalues = result.lambdas.iter().map(|z| [z.re, z.im]).collect();
    report.omegas = result.omegas.iter().map(|z| [z.re, z.im]).collect();
    save_result(&a.out, &result, Some((nx, ny)), a.imag)?;
    export_report(&report, &a.out.join(REPORT))?;
    let failed = report.recovery_failures.len();
    if failed > 0 {
        Ok(format!("{} modes, {failed} failed to recover", result.lambdas.len()))
    } else {
        Ok(format!("{} modes recovered", result.lambdas.len()))
    }
}

fn run_compare(a: &CompareArgs) -> Result<String> {
    let ra = load_result(&a.a)?;
    let rb = load_result(&a.b)?;
    let cmp = compare_spectra(&ra.lambdas, ra.modes.as_ref(), ra.weights.as_deref(), &rb.lambdas, rb.modes.as_ref());
    let mut report = ExperimentReport::empty();
    report.config = serde_json::json!({"a": a.a.display().to_string(), "b": a.b.display().to_string()});
    report.eigenvalues = rb.lambdas.iter().map(|z| [z.re, z.im]).collect();
    let msg = format!(
        "{} matched, max |dlambda| {:.3e}, min alignment {}",
        cmp.eigen_table.len(),
        cmp.max_abs_diff.unwrap_or(0.0),
        cmp.min_alignment.map_or("n/a".to_string(), |x| format!("{x:.6}"))
    );
    report.reference = Some(cmp);
    export_report(&report, &a.out)?;
    Ok(msg)
}

/// Returns the summary and whether every check passed.
fn run_verify(a: &VerifyArgs) -> Result<(String, bool)> {
    let data = load_snapshots(&a.snapshots, SNAPSHOTS)?;
    let ledger = verify_invariance_suite(&data, a.seed)?;
    let mut lines = Vec::new();
    for c in &ledger.checks {
        lines.push(format!(
            "{} {}: eigenvalue deviation {:.3e}, mode deviation {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.eigen_deviation,
            c.mode_deviation
        ));
    }
    if let Some(out) = &a.out {
        export_report(&ledger, out)?;
    }
    Ok((lines.join("\n"), ledger.all_passed()))
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CSDMD_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("CSDMD_THREADS must be a count, got '{v}'")))?;
    if n > 0 {
        // a pool that is already initialized keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Exit code for an error: 2 for configuration and input problems, 3 for
/// numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        2
    } else {
        3
    }
}

/// Runs a parsed command; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let res = configure_threads().and_then(|_| match &cli.command {
        Command::Gen(GenCommand::Example1(a)) => gen_example1(a).map(|s| (s, true)),
        Command::Gen(GenCommand::Gyre(a)) => gen_gyre(a).map(|s| (s, true)),
        Command::Dmd(a) => run_dmd(a).map(|s| (s, true)),
        Command::Cdmd(a) => run_cdmd(a).map(|s| (s, true)),
        Command::Csdmd(a) => run_csdmd(a).map(|s| (s, true)),
        Command::Compare(a) => run_compare(a).map(|s| (s, true)),
        Command::Verify(a) => run_verify(a),
    });
    match res {
        Ok((msg, ok)) => {
            println!("{msg}");
            if ok {
                0
            } else {
                eprintln!("error: invariance suite reported failures");
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` and runs; usage errors exit with code 2.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
