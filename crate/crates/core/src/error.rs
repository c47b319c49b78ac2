use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("every weight is zero")]
    AllZero,
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("non-finite weight at index {index}")]
    NonFiniteWeight { index: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("zero bias transform is undefined for a distribution with zero mean")]
    ZeroMean,
    #[error("value {value} at x = {x} exceeds the declared envelope bound {bound}")]
    EnvelopeViolated { x: usize, value: f64, bound: f64 },
    #[error("grid too short: need grid bound {needed}, have {available}")]
    GridTooShort { needed: usize, available: usize },
    #[error("series tail not certified: {0}")]
    TailNotCertified(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
