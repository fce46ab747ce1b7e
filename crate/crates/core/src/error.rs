use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge ({context}): partial value {partial:e}, error estimate {error_estimate:e}")]
    QuadratureNonConvergence { context: String, partial: f64, error_estimate: f64 },

    #[error("integrability assumption on exp(-t Psi(|xi|^2/2)) fails: {0}")]
    AssumptionA(String),

    #[error("non-finite potential value {value} at point {point:?}")]
    NonFinitePotential { point: Vec<f64>, value: f64 },

    #[error("off-diagonal coupling U_{beta} vanishes at a jump (x = {point:?}); call regularize() with epsilon > 0")]
    VanishingOffDiagonal { beta: usize, point: Vec<f64> },

    #[error("operator is not Hermitian: max |M - M^*| = {deviation:e}")]
    NonHermitian { deviation: f64 },

    #[error("spectrum has negative part (min eigenvalue {min_eigenvalue:e}); shift by inf spec before applying Psi")]
    NegativeSpectrum { min_eigenvalue: f64 },

    #[error("path weight overflowed at path {path}: the expectation likely diverges (check the spectral shift)")]
    NonFiniteWeight { path: u64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
