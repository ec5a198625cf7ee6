use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("unknown molecule family `{0}`")]
    UnknownFamily(String),

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("too many qubits: {requested} (limit {limit})")]
    TooManyQubits { requested: usize, limit: usize },

    #[error("imaginary residue {residue:e} on term {term} where a real coefficient was expected")]
    PhaseResolution { term: String, residue: f64 },

    #[error("infeasible sector: {0}")]
    InfeasibleSector(String),

    #[error("operator does not preserve the sector (leak weight {0:e})")]
    SectorLeak(f64),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("log branch ambiguity: eigenphase {phase} reaches pi; time step {t} too large")]
    BranchAmbiguity { phase: f64, t: f64 },

    #[error("tiling error: {0}")]
    Tiling(String),

    #[error("error-constant kind mismatch: {0}")]
    KindMismatch(String),

    #[error("filter analysis failed: {0}")]
    FlatFilter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        field,
        reason: reason.into(),
    }
}
