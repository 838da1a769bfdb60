use alloc::string::String;

/// Errors reported by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("t = {t} is outside the tabulated range [{lo}, {hi}]")]
    Extrapolation { t: f64, lo: f64, hi: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("delayed argument {s} precedes the domain of the initial history")]
    HistoryDomain { s: f64 },

    #[error("solution is not finite at t = {t}")]
    Overflow { t: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
