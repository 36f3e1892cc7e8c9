use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Values are carried as `f64` regardless of the scalar type so messages stay
/// uniform across precisions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("nodes invalid for n = {n}, xi = {xi}; need n >= {min_n}")]
    InvalidNodes { n: usize, xi: f64, min_n: usize },

    #[error("function `{name}` is not finite at x = {x}")]
    NonFinite { name: String, x: f64 },

    #[error("function `{0}` has no second derivative")]
    MissingSecondDerivative(String),

    #[error("function `{0}` has no calibrated rate target")]
    MissingTarget(String),

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("rate fit needs at least {needed} positive samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("sweep is invalid: {0}")]
    InvalidSweep(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        what,
        value,
        domain,
    }
}
