use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not make progress.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A field needs a radial profile that was not supplied.
    #[error("no radial profile for degree {0}")]
    MissingProfile(usize),

    /// The model curvature is not bracketed by the comparison pair.
    #[error("curvature bracket violated: need {kappa} <= {model} <= {upper}")]
    Bracket { kappa: f64, model: f64, upper: f64 },

    /// Structurally invalid input (empty field, bad mode index, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A sampling grid is too coarse for the requested degree.
    #[error("resolution {resolution} below the Nyquist guard {required}")]
    Resolution { resolution: usize, required: usize },

    /// A regression was asked to fit fewer distinct inputs than it needs.
    #[error("insufficient range: {0}")]
    InsufficientRange(String),

    /// A chain of balls could not be built within its step budget.
    #[error("chain construction failed: {0}")]
    Chain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
