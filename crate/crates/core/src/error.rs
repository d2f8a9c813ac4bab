use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sample vector has {found} entries, grid has {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },

    #[error("level must be strictly positive, found h[{index}] = {value:e}")]
    NonPositiveLevel { index: usize, value: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("no-slip condition violated: v[0] = {left:e}, v[n-1] = {right:e}")]
    WallVelocity { left: f64, right: f64 },

    #[error("liquid mass {found} differs from configured mass {expected} (relative {relative:e})")]
    MassMismatch {
        expected: f64,
        found: f64,
        relative: f64,
    },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("friction model does not satisfy the velocity-independent bound: {0}")]
    AssumptionHNotSatisfied(String),

    #[error("infeasible gain targets: {0}")]
    Infeasible(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
