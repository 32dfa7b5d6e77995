use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("density {0} outside [0, 1]")]
    DensityOutOfRange(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("instability detected at t = {t}: value {value} escaped [0, 1]")]
    Instability { t: f64, value: f64 },
    #[error("path not interior: mobility {chi:e} below floor at t = {t}, u = {u}")]
    PathNotInterior { t: f64, u: f64, chi: f64 },
    #[error("control field does not vanish at the boundary (|H| = {0:e})")]
    BoundaryNonzero(f64),
    #[error("path does not start at the initial profile (sup gap {0:e})")]
    StartMismatch(f64),
    #[error("tilt required for this operation")]
    MissingTilt,
    #[error("at least two replicas are needed for a standard error, got {0}")]
    TooFewReplicas(usize),
    #[error("jump rate overflow ({0:e}); lattice too large for f64 rates")]
    RateOverflow(f64),
    #[error("resolvent parameter {0:e} is below 1e-8; use a finer representation")]
    ResolventUnderResolved(f64),
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
