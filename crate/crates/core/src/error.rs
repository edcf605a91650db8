use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {time} lies outside [0, {horizon}]")]
    TimeOutOfRange { time: f64, horizon: f64 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("value {value} at t = {time} is not between the neighbouring knot values {left} and {right}")]
    InconsistentKnot {
        time: f64,
        value: f64,
        left: f64,
        right: f64,
    },

    #[error("t = {time} is already a knot with value {existing}, not {requested}")]
    KnotConflict {
        time: f64,
        existing: f64,
        requested: f64,
    },

    #[error("a/(a+b) = {ratio} is dyadic; the level ladder is undefined")]
    DyadicRatio { ratio: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid sign word: {0}")]
    InvalidWord(String),

    #[error("exponent {exponent} outside [0, 2^{digits})")]
    ExponentOutOfRange { exponent: i64, digits: usize },

    #[error("expected 0 < a < b < c, got ({a}, {b}, {c})")]
    TripleOrder { a: String, b: String, c: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
