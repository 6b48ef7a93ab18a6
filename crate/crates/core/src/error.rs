use thiserror::Error;

/// Errors produced by mesh construction, assembly and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("element family {family} is not compatible with {cell} meshes")]
    IncompatibleFamily {
        family: &'static str,
        cell: &'static str,
    },

    #[error("degenerate cell {0} (zero Jacobian determinant)")]
    DegenerateCell(usize),

    #[error("unsupported quadrature degree {0} (supported: 1..=4)")]
    UnsupportedQuadrature(usize),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is singular (zero pivot in column {0})")]
    Singular(usize),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("Newton iteration diverged after {0} iterations")]
    NewtonDiverged(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
