use thiserror::Error;

/// Errors produced by the numerical pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular root configuration: {0}")]
    SingularConfiguration(String),

    #[error("root set is not conjugate-closed: imaginary part of root sum is {imag:e}")]
    PairingViolation { imag: f64 },

    #[error("Bethe root reconstruction failed, best residual {residual:e}")]
    ReconstructionFailed { residual: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("Jacobian is singular (near-coincident roots)")]
    SingularJacobian,

    #[error("sample point x = {x} lies within {distance:e} of a wavefunction node")]
    NodeProximity { x: f64, distance: f64 },

    #[error("finite-difference domain too small after {expansions} expansions")]
    DomainTooSmall { expansions: usize },

    #[error("quartic coefficient V2 = {v2} is not positive")]
    QuarticInstability { v2: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("no crossover in scanned window")]
    NoCrossover,

    #[error("need at least {needed} sample points, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("fit window leaves the grid: {0}")]
    WindowOutOfRange(String),

    #[error("invalid state vector: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
