use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{family}: response value {value} is outside the support ({support})")]
    OutOfSupport {
        family: &'static str,
        value: f64,
        support: &'static str,
    },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid model indicator: {0}")]
    InvalidModel(String),

    #[error("family {0} is not supported here: {1}")]
    UnsupportedFamily(&'static str, &'static str),

    #[error("families differ: truth is {truth}, candidate is {candidate}")]
    FamilyMismatch {
        truth: &'static str,
        candidate: &'static str,
    },

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("selection rule retained no draws (largest inclusion probability is {max_available})")]
    EmptySelection { max_available: f64 },

    #[error("cannot standardize column {column}: it is constant")]
    ConstantColumn { column: usize },

    #[error("condition {condition}: {reason}")]
    Audit { condition: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
