use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("division by an identically zero expression")]
    DivisionByZero,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("`u` is the exponential symbol and cannot be used as {0}")]
    ReservedSymbol(&'static str),

    #[error("duplicate chart variable `{0}`")]
    DuplicateVariable(String),

    #[error("expression is not integrable in `a`: {0}")]
    NotIntegrable(String),

    #[error("expression is singular at the evaluation point")]
    Singular,

    #[error("evaluation point does not assign `{0}`")]
    MissingValue(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("1-form is not closed: d{0} differs from its transpose")]
    NotClosed(String),

    #[error("generator table entry is not constant: {0}")]
    NonConstantTable(String),

    #[error("model has no generator tables")]
    NoGeneratorTables,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear system is inconsistent: {0}")]
    Inconsistent(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("fixture error: {0}")]
    Fixture(String),
}

pub type Result<T> = std::result::Result<T, Error>;
