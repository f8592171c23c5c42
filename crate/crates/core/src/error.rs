use thiserror::Error;

/// Errors raised by the distribution, moment and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NpsError {
    #[error("{what} = {value} is outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("invalid family spec '{0}'")]
    FamilySpec(String),

    #[error("series over n did not reach tail mass {tol:e} within {cap} terms")]
    TruncationCap { cap: usize, tol: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} > requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("root finding failed: {0}")]
    Root(String),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("overflow evaluating {0}")]
    Overflow(String),

    #[error("{0} is not supported for this family")]
    Unsupported(String),

    #[error("empty or degenerate sample: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, NpsError>;

pub(crate) fn domain_err(what: &'static str, value: f64, domain: impl ToString) -> NpsError {
    NpsError::Domain {
        what,
        value,
        domain: domain.to_string(),
    }
}
