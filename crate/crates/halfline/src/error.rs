use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown profile '{0}'")]
    UnknownProfile(String),
    #[error("insufficient samples for interpolation")]
    InsufficientSamples,
    #[error("table t column is not strictly increasing at row {0}")]
    NonMonotoneTable(usize),
    #[error("table row {row} has a negative {field} sample")]
    NegativeSample { row: usize, field: &'static str },
    #[error("table must start below t = 1e-3, first sample is at t = {0}")]
    LateTableStart(f64),
    #[error("t = {t} is outside the sampled range [0, {end}]")]
    Extrapolation { t: f64, end: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("no sign change of {0} found on the validation grid")]
    NoCriticalPoint(&'static str),
    #[error("root finding failed: {0}")]
    Root(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("Newton iteration failed: {0}")]
    Newton(String),
    #[error("linear solve failed: {0}")]
    LinearAlgebra(String),
}

impl Error {
    /// True for failures of an algorithm rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Root(_)
                | Error::Quadrature(_)
                | Error::Integration(_)
                | Error::Newton(_)
                | Error::LinearAlgebra(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
