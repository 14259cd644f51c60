use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("depth exceeded: string of length {len} against depth bound {bound}")]
    DepthExceeded { len: usize, bound: usize },
    #[error("out of budget: {0}")]
    OutOfBudget(String),
    #[error("measure budget violated: {0}")]
    BudgetViolation(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("padding search exhausted: {0}")]
    PaddingExhausted(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("dyadic exponent {0} exceeds the configured cap")]
    ExponentCap(u64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::OutOfBudget(_)
            | Error::BudgetViolation(_)
            | Error::DepthExceeded { .. }
            | Error::ExponentCap(_)
            | Error::Parse(_) => 2,
            Error::SearchExhausted(_) | Error::PaddingExhausted(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
