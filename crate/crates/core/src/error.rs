use alloc::string::String;

/// Errors raised by the period-detection pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Input data violates a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// A factorization, solve or root search failed.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Matrix is not positive definite even after diagonal jitter.
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    /// The alternative model interpolates the data exactly, or the data
    /// carry no variation, so the statistic is undefined.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    /// Hyperparameter optimization could not produce a finite objective.
    #[error("fit error: {0}")]
    Fit(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
