use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown vertex handle {0}")]
    InvalidVertex(u32),

    #[error("vertex budget of {cap} exceeded")]
    Budget { cap: usize },

    #[error("frontier contamination: {0}")]
    Frontier(String),

    #[error("unsupported family {family} for {operation}")]
    UnsupportedFamily { family: String, operation: &'static str },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("weight exponent {0} too large for float conversion")]
    FloatRange(i64),
}

pub type Result<T> = std::result::Result<T, Error>;
