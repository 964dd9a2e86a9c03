use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid place: {0}")]
    InvalidPlace(String),
    #[error("unsupported prime {0}")]
    UnsupportedPrime(u64),
    #[error("{a} is not coprime to the modulus {modulus}")]
    NotCoprime { a: i64, modulus: u64 },
    #[error("{0} is a square, the extension is not quadratic")]
    NotQuadratic(String),
    #[error("wrong case: {0}")]
    WrongCase(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error at {path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("CM forms are not supported")]
    CmNotSupported,
    #[error("search exhausted up to {bound}")]
    SearchExhausted { bound: u64 },
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("zero coefficient: {0}")]
    ZeroCoefficient(String),
    #[error("consistency violation: {0}")]
    ConsistencyViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
