use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("eigensolver did not converge after {iterations} rotations")]
    NoConvergence { iterations: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("operation requires {expected} probe mode, got {found}")]
    WrongMode { expected: &'static str, found: &'static str },

    #[error("quadrature did not converge after {refinements} refinements (last change {change:e})")]
    QuadratureNonConvergence { refinements: usize, change: f64 },

    #[error("no spectral line found in the measurement record")]
    NoClusters,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("populations are not thermal: degeneracy residual {residual:.3} at line {line}")]
    NonThermal { line: usize, residual: f64 },

    #[error("ground state is degenerate (multiplicity {multiplicity})")]
    DegenerateGroundState { multiplicity: usize },

    #[error("free energy is undefined at beta = {beta}")]
    FreeEnergyUndefined { beta: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
