use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: `{key}` {constraint}")]
    Config { key: String, constraint: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("negative analytic radius {radius} (analytic strip breached)")]
    NegativeRadius { radius: f64 },

    #[error("CFL violation at t = {t}: dt * max|velocity| / dx = {cfl:.3} > {limit}; reduce dt")]
    Cfl { t: f64, cfl: f64, limit: f64 },

    #[error("numerical fault at t = {t}: {what}")]
    NumericFault { t: f64, what: String },

    #[error("tridiagonal solve failed: zero pivot at row {row}")]
    SingularPivot { row: usize },

    #[error("integral `{term}` diverges: {detail}")]
    Divergent { term: String, detail: String },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("initial data rejected: {constraint} (measured {measured:.3e}, tolerance {tolerance:.1e})")]
    InitialData {
        constraint: String,
        measured: f64,
        tolerance: f64,
    },

    #[error("decay fit: {0}")]
    Fit(String),

    #[error("empty time window [{t0}, {t1}]")]
    EmptyWindow { t0: f64, t1: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {detail}")]
    Format { path: String, detail: String },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
