use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("insufficient length: need {needed} symbols, have {available}")]
    InsufficientLength { needed: BigUint, available: BigUint },
    #[error("position {0} is beyond the constructed ledger")]
    Undefined(BigUint),
    #[error("{what}: {count} exceeds cap {cap}")]
    CapExceeded { what: String, count: BigUint, cap: BigUint },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("no admissible block: {0}")]
    NoSuchTuple(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
