use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("value is not rational")]
    NotRational,
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("unsupported prime {0}")]
    UnsupportedPrime(u64),
    #[error("operation undefined for the zero element")]
    ZeroElement,
    #[error("no order found within bound {0}")]
    NoOrderWithinBound(u64),
    #[error("block signature mismatch: {0:?} vs {1:?}")]
    SignatureMismatch(Vec<usize>, Vec<usize>),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("inconsistent system: {0}")]
    Inconsistent(String),
    #[error("underdetermined system: rank {rank} < {unknowns} unknowns")]
    Underdetermined { rank: usize, unknowns: usize },
    #[error("no character value for class {0}")]
    UnassignedClass(String),
    #[error("bad pattern: {0}")]
    BadPattern(String),
    #[error("group too large: {0} elements")]
    TooLarge(u64),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
