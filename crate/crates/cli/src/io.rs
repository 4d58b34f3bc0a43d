//! On-disk formats: raw matrix files with JSON sidecars, PGM mode images and
//! JSON reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use csdmd::error::{Error, Result};
use csdmd::linalg::Matrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Sidecar describing a `.bin` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixData {
    Real(Matrix<f64>),
    Complex(Matrix<Complex64>),
}

impl MatrixData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixData::Real(m) => m.shape(),
            MatrixData::Complex(m) => m.shape(),
        }
    }

    pub fn into_complex(self) -> Matrix<Complex64> {
        match self {
            MatrixData::Real(m) => m.to_complex(),
            MatrixData::Complex(m) => m,
        }
    }

    pub fn into_real(self, path: &Path) -> Result<Matrix<f64>> {
        match self {
            MatrixData::Real(m) => Ok(m),
            MatrixData::Complex(_) => Err(format_err(path, "expected a real (f64) matrix")),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), msg: msg.into() }
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Writes `base.bin` and `base.json`.
pub fn write_matrix(base: &Path, data: &MatrixData, grid: Option<(usize, usize)>, dt: Option<f64>) -> Result<()> {
    let (rows, cols) = data.shape();
    let (dtype, bytes) = match data {
        MatrixData::Real(m) => ("f64", m.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<u8>>()),
        MatrixData::Complex(m) => (
            "c128",
            m.as_slice().iter().flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes())).collect(),
        ),
    };
    let meta = MatrixMeta { rows, cols, dtype: dtype.into(), grid: grid.map(|(a, b)| [a, b]), dt };
    write_atomic(&with_ext(base, "bin"), &bytes)?;
    let json = serde_json::to_value(&meta).map_err(|e| format_err(base, e.to_string()))?;
    write_atomic(&with_ext(base, "json"), to_json_string(&json).as_bytes())
}

/// Reads a matrix written by [`write_matrix`].
pub fn read_matrix(base: &Path) -> Result<(MatrixData, MatrixMeta)> {
    let jp = with_ext(base, "json");
    let text = fs::read_to_string(&jp).map_err(|e| io_err(&jp, e))?;
    let meta: MatrixMeta = serde_json::from_str(&text).map_err(|e| format_err(&jp, e.to_string()))?;
    let bp = with_ext(base, "bin");
    let bytes = fs::read(&bp).map_err(|e| io_err(&bp, e))?;
    let count = meta.rows * meta.cols;
    let width = match meta.dtype.as_str() {
        "f64" => 8,
        "c128" => 16,
        other => return Err(format_err(&jp, format!("unknown dtype '{other}'"))),
    };
    if bytes.len() != count * width {
        return Err(format_err(&bp, format!("expected {} bytes for {}x{} {}, found {}", count * width, meta.rows, meta.cols, meta.dtype, bytes.len())));
    }
    if let Some([nx, ny]) = meta.grid {
        if nx * ny != meta.rows {
            return Err(format_err(&jp, format!("grid {nx}x{ny} does not match {} rows", meta.rows)));
        }
    }
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let data = if width == 8 {
        MatrixData::Real(Matrix::from_col_major(meta.rows, meta.cols, vals).map_err(|e| format_err(&bp, e.to_string()))?)
    } else {
        let z = vals.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        MatrixData::Complex(Matrix::from_col_major(meta.rows, meta.cols, z).map_err(|e| format_err(&bp, e.to_string()))?)
    };
    Ok((data, meta))
}

/// Rescale constants for a mode image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub width: usize,
    pub height: usize,
    pub part: String,
    pub min: f64,
    pub max: f64,
}

/// Encodes one part of a field as an 8-bit binary PGM. Image rows run from
/// the largest `y` at the top to `y = 0` at the bottom.
pub fn encode_pgm(values: &[f64], grid: (usize, usize)) -> (Vec<u8>, f64, f64) {
    let (nx, ny) = grid;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for r in 0..ny {
        let j = ny - 1 - r;
        for i in 0..nx {
            let v = values[i + nx * j];
            let g = if span > 0.0 { ((v - min) / span * 255.0).round() } else { 0.0 };
            out.push(g.clamp(0.0, 255.0) as u8);
        }
    }
    (out, min, max)
}

/// Writes `base.pgm` and `base.json` for the real or imaginary part of a mode.
pub fn write_mode_image(base: &Path, mode: &[Complex64], grid: (usize, usize), imag: bool) -> Result<()> {
    if mode.len() != grid.0 * grid.1 {
        return Err(Error::Dimension(format!("mode of length {} on {}x{} grid", mode.len(), grid.0, grid.1)));
    }
    let vals: Vec<f64> = mode.iter().map(|z| if imag { z.im } else { z.re }).collect();
    let (bytes, min, max) = encode_pgm(&vals, grid);
    write_atomic(&with_ext(base, "pgm"), &bytes)?;
    let meta = ImageMeta { width: grid.0, height: grid.1, part: if imag { "imag" } else { "real" }.into(), min, max };
    let json = serde_json::to_value(&meta).map_err(|e| format_err(base, e.to_string()))?;
    write_atomic(&with_ext(base, "json"), to_json_string(&json).as_bytes())
}

/// Parses the header of a binary PGM, returning `(width, height, maxval, offset)`.
pub fn parse_pgm_header(bytes: &[u8]) -> Option<(usize, usize, usize, usize)> {
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 && i < bytes.len() {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).ok()?.to_string());
    }
    if fields.len() < 4 || fields[0] != "P5" {
        return None;
    }
    Some((fields[1].parse().ok()?, fields[2].parse().ok()?, fields[3].parse().ok()?, i + 1))
}

fn write_value(v: &Value, out: &mut String, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    out.push_str(&format!("{x:.16e}"));
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric arrays (complex pairs, shapes) stay on one line
            if a.len() <= 2 && a.iter().all(|x| x.is_number() || x.is_null()) {
                out.push('[');
                for (k, x) in a.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, out, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, out, indent + 1);
                if k + 1 < a.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for (k, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(&m[*key], out, indent + 1);
                if k + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and every float written with 17
/// significant digits. Non-finite floats become `null`.
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out, 0);
    out.push('\n');
    out
}

/// Serializes `report` to `path` atomically.
pub fn export_report<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    let v = serde_json::to_value(report).map_err(|e| format_err(path, e.to_string()))?;
    write_atomic(path, to_json_string(&v).as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}
