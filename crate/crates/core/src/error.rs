use thiserror::Error;

/// Errors raised by constructors, evaluators and the oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("unsupported mechanism: {0}")]
    UnsupportedMechanism(String),

    #[error("unsupported order: {0}")]
    UnsupportedOrder(String),

    #[error("privacy loss undefined at z = {0}: both densities vanish")]
    UndefinedLoss(f64),

    #[error("target loss {target} outside attained range [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("invalid bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate group relation: K+ = K- = 0")]
    DegenerateRelation,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("loss grid support exceeds {0} buckets")]
    MaxSupport(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
