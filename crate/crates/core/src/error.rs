use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name}: {message} (got {value})")]
    InvalidParameter {
        name: &'static str,
        message: &'static str,
        value: f64,
    },

    #[error(
        "quadrature did not converge ({context}): abs error {abs_error:.3e} > tolerance {tol:.3e}"
    )]
    QuadratureNonConvergence {
        context: &'static str,
        abs_error: f64,
        tol: f64,
    },

    #[error("bias extrapolation failed: {message}")]
    FitFailure { message: String },

    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },
}

pub type Result<T> = core::result::Result<T, Error>;
