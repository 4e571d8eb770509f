use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested symmetry sector contains no basis states.
    #[error("empty sector: {0}")]
    EmptySector(String),

    /// A dense method was asked to handle a matrix above its size cutoff.
    #[error("dimension {dim} exceeds the dense cutoff {cutoff}; use the extremal (Lanczos) solver or a smaller system")]
    TooLarge { dim: usize, cutoff: usize },

    /// An iterative solver stopped before meeting its tolerance.
    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence { iterations: usize, best_residual: f64 },

    /// An operator couples a symmetry sector to its complement.
    #[error("operator leaks out of sector {sector}: element ({row}, {col}) = {value:e}")]
    SectorLeak {
        sector: String,
        row: usize,
        col: usize,
        value: f64,
    },

    /// Fewer than two distinct levels, so no gap is defined.
    #[error("degenerate spectrum: fewer than two distinct eigenvalues")]
    DegenerateSpectrum,

    /// A unique ground state was required but several were found.
    #[error("ground state is {0}-fold degenerate; a unique ground state is required")]
    GroundDegeneracy(usize),

    /// Total-spin classification by Casimir eigenvalue failed.
    #[error("classification failed: {0}")]
    Classification(String),

    /// A level table is missing an entry on its spin grid.
    #[error("incomplete level table: no entry for 2S = {0}")]
    IncompleteTable(i64),

    /// Two routes that must agree on a spectrum did not.
    #[error("conjugacy failure: max eigenvalue deviation {0:e}")]
    Conjugacy(f64),

    /// Not enough levels were available for the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Text input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
