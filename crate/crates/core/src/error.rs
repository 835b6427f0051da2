use thiserror::Error;

/// Errors produced by grids, solvers and the verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("eigenvalues left the admissible cone at node {node}: {detail}")]
    ConeExit { node: usize, detail: String },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("compatibility condition violated: {0}")]
    Compatibility(String),

    #[error("premise does not hold: {0}")]
    Premise(String),

    #[error("stage `{stage}` failed: {detail}")]
    Stage { stage: String, detail: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("malformed field data: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
