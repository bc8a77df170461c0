use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Mandel Q undefined for vacuum (<n> = {0:e})")]
    UndefinedForVacuum(f64),
    #[error("ill-conditioned probe design: condition number {cond:e} exceeds {limit:e}")]
    IllConditionedDesign { cond: f64, limit: f64 },
    #[error("finite-difference stencil point beta = {re}{im:+}i lies outside the characteristic-function domain")]
    StencilOutOfDomain { re: f64, im: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
