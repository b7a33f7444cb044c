use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed degree distribution at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("degree distribution sums to {sum}, expected 1")]
    Normalization { sum: f64 },

    #[error("invalid value: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("user {0} was not resolved by the receiver, no handshake is possible")]
    NotResolved(usize),

    #[error("no observations were tallied")]
    EmptyReport,

    #[error("enumeration needs {configurations} weighted configurations, the limit is {limit}")]
    TooLarge { configurations: f64, limit: f64 },

    #[error("impossible handshake outcome [1, 0, 1] observed {count} times at load point {load_index}")]
    TheoremViolation { load_index: usize, count: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
