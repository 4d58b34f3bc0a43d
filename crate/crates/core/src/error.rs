use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("all singular values truncated (tolerance {tol:e})")]
    RankZero { tol: f64 },

    #[error("projected data has rank {projected} but full data has rank {full}; measurement matrix annihilates part of the signal")]
    RankCollapse { full: usize, projected: usize },

    #[error("bad measurement dimensions: {0}")]
    BadDimensions(String),

    #[error("wavenumber ({kx}, {ky}) outside {nx}x{ny} grid")]
    BadWavenumber { kx: i64, ky: i64, nx: usize, ny: usize },

    #[error("sparse recovery stalled at relative residual {residual:.3e} after {iterations} iterations")]
    NoProgress { residual: f64, iterations: usize },

    #[error("measurement vector is numerically zero")]
    ZeroInput,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

impl Error {
    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }

    /// Innermost error, stripping stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for errors caused by user configuration or input files rather
    /// than by a numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self.root(),
            Error::Config(_)
                | Error::BadDimensions(_)
                | Error::BadWavenumber { .. }
                | Error::Io { .. }
                | Error::Format { .. }
                | Error::Dimension(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
