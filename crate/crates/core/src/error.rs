//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the meshing and solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header {path}: {reason}")]
    Header { path: String, reason: String },

    #[error("payload size mismatch: expected {expected} bytes for dims {dims:?}, found {found}")]
    SizeMismatch {
        dims: (usize, usize, usize),
        expected: usize,
        found: usize,
    },

    #[error("voxel code {code} has no palette entry")]
    UnknownMaterial { code: u8 },

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("invalid voxel grid: {0}")]
    InvalidGrid(String),

    #[error("unknown synthetic model `{0}`")]
    UnknownModel(String),

    #[error("inconsistent model parameters: {0}")]
    ModelParams(String),

    #[error("octree error: {0}")]
    Octree(String),

    #[error("mesh is not balanced: cells {0:?} and {1:?} differ by more than one level")]
    Unbalanced(usize, usize),

    #[error("element order {0} outside supported range 1..=3")]
    OrderOutOfRange(usize),

    #[error("face mesh error: {0}")]
    FaceMesh(String),

    #[error("inverted face orientation: det J = {0:.3e} <= 0")]
    InvertedFace(f64),

    #[error("subdomain boundary not closed: face area sum {found:.6e}, expected {expected:.6e}")]
    OpenBoundary { found: f64, expected: f64 },

    #[error("numerical failure in {routine}: {detail}")]
    Numerical { routine: String, detail: String },

    #[error("LAPACK {routine} returned info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("boundary condition selection `{0}` matched no nodes")]
    EmptySelection(String),

    #[error("system is singular: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn numerical(routine: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numerical {
            routine: routine.into(),
            detail: detail.into(),
        }
    }
}
