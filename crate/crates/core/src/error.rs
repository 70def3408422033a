use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index window [{lo}, {hi}] is not valid for {context}")]
    InvalidWindow { lo: i64, hi: i64, context: String },

    #[error("non-finite coefficient at index {index}")]
    NonFinite { index: i64 },

    #[error("zero weight w_{index}")]
    ZeroWeight { index: i64 },

    #[error("threshold sequence does not tend to infinity: {witness}")]
    DivergenceRequired { witness: String },

    #[error("convergence certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("certificate failed: {0}")]
    CertificateFailed(String),

    #[error("horizon {horizon} exhausted: {reason}")]
    HorizonExhausted { horizon: i64, reason: String },

    #[error("orbit step {step} exceeds the sampled window (max {max})")]
    OrbitHorizonExceeded { step: i64, max: i64 },

    #[error("residual {residual:e} exceeds {tolerance:e} at column {column}")]
    Residual { column: usize, residual: f64, tolerance: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
