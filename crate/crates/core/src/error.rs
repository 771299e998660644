use thiserror::Error;

use crate::vqsd::DiagonalizationResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("not a valid density matrix: {0}")]
    NotDensity(String),

    #[error("channel is not trace preserving (residual {0:e})")]
    NotCptp(f64),

    #[error("not a valid Choi matrix: {0}")]
    NotChoi(String),

    #[error("truncation rank {m} outside 1..={dim}")]
    BadRank { m: usize, dim: usize },

    #[error("argument {value:e} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("marginal stayed singular after {0} resamples")]
    SingularMarginal(usize),

    #[error("bad ansatz shape: {0}")]
    BadShape(String),

    #[error("basis is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("observable has imaginary part {0:e}")]
    NonRealObservable(f64),

    #[error("diagonalization did not converge (best cost {:e})", .0.final_cost)]
    NoConvergence(Box<DiagonalizationResult>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
