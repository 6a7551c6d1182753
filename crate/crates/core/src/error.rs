use std::path::PathBuf;

use thiserror::Error;

/// Everything that can abort a simulation, a solve, or an I/O operation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("mesh tangled: triangle {triangle} has signed area {area:e}")]
    MeshTangled { triangle: usize, area: f64 },

    #[error("wall node {node} left the wall: r = {r:e}, expected {radius:e}")]
    WallViolation { node: usize, r: f64, radius: f64 },

    #[error("free surface folded: edge {edge} has vertical normal component {nu3:e}")]
    SurfaceFolded { edge: usize, nu3: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error("relative residual {residual:e} exceeds {limit:e}")]
    ResidualTooLarge { residual: f64, limit: f64 },

    #[error("domain emptied: contact line at {height:e} m fell below {limit:e} m")]
    DomainEmptied { height: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step {step} (t = {time:e} s) failed: {source}")]
    StepFailed {
        step: usize,
        time: f64,
        #[source]
        source: Box<SimError>,
    },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    /// Strips any `StepFailed` wrappers.
    pub fn root(&self) -> &SimError {
        match self {
            SimError::StepFailed { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
