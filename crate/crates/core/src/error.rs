use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unbounded field: {0}")]
    Unbounded(String),
    #[error("integration domain is unbounded: {0}")]
    UnboundedDomain(String),
    #[error("support is the whole space; no dyadic range")]
    UnboundedSupport,
    #[error("non-finite integrand value: {0}")]
    NonFinite(String),
    #[error("field has no analytic gradient")]
    MissingGradient,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {dim} for {what} (max {max})")]
    UnsupportedDimension { dim: usize, what: &'static str, max: usize },
    #[error("parameter violation: {0}")]
    ParamViolation(String),
    #[error("case {case}: hypothesis violated: {hypothesis}")]
    HypothesisViolation { case: String, hypothesis: String },
}

impl Error {
    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Unbounded(_)
                | Error::UnboundedSupport
                | Error::MissingGradient
                | Error::DimensionMismatch { .. }
                | Error::UnsupportedDimension { .. }
                | Error::ParamViolation(_)
                | Error::HypothesisViolation { .. }
                | Error::UnboundedDomain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
