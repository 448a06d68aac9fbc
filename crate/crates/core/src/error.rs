use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Fock index {n} is outside the truncation 0..{d}")]
    CutoffViolation { n: usize, d: usize },

    #[error("invalid dimension {0}: need at least 2 Fock levels")]
    InvalidDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unphysical channel: N - (1 - eta)/2 = {margin:.3e} < 0")]
    Unphysical { margin: f64 },

    #[error("truncation insufficient: {0}")]
    Truncation(String),

    #[error("impossible detection event (probability {probability:.3e})")]
    ImpossibleEvent { probability: f64 },

    #[error("unsupported detection pattern: {0}")]
    UnsupportedPattern(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("oracle request is intractable: {0}")]
    Intractable(String),

    #[error("invalid sweep configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
}
