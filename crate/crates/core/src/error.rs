use alloc::string::String;

use crate::path::Time;

pub type Result<T> = core::result::Result<T, Error>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Data,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("lag {lag} outside 1..={order}")]
    LagOutOfRange { lag: usize, order: usize },
    #[error("time {t} outside coefficient window [{lo}, {hi}]")]
    OutOfWindow { t: Time, lo: Time, hi: Time },
    #[error("determinant oracle is capped at order {cap}, got {order}")]
    OracleCapExceeded { order: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("series not summable: {terms} terms without decay")]
    NonSummable { terms: usize },
    #[error("MA part not invertible at t = {t}")]
    NotInvertible { t: Time },
    #[error("need {required} observations of history, got {available}")]
    InsufficientHistory { required: usize, available: usize },
    #[error("moment condition violated: {0}")]
    ConditionViolated(String),
    #[error("singular matrix")]
    Singular,
    #[error("regime {regime} is not stationary")]
    NotStationary { regime: usize },
    #[error("series too short: {len} observations, need {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("rank-deficient regression on segment [{start}, {end}]")]
    RankDeficient { start: Time, end: Time },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::LagOutOfRange { .. }
            | Error::OracleCapExceeded { .. }
            | Error::InvalidParameter(_)
            | Error::LengthMismatch { .. } => ErrorKind::Config,
            Error::OutOfWindow { .. }
            | Error::InsufficientHistory { .. }
            | Error::SeriesTooShort { .. }
            | Error::RankDeficient { .. } => ErrorKind::Data,
            Error::NonSummable { .. }
            | Error::NotInvertible { .. }
            | Error::ConditionViolated(_)
            | Error::Singular
            | Error::NotStationary { .. }
            | Error::Numerical(_) => ErrorKind::Numeric,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
