use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parity mismatch: length {n} cannot end at {a}")]
    Parity { n: i64, a: i64 },

    #[error("enumeration capacity exceeded: length {n} is above the guard {max}")]
    Capacity { n: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate straddle point: u = {0} lies on a zero of the path")]
    DegenerateStraddle(f64),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("cdf is not monotone near x = {0}")]
    NonMonotoneCdf(f64),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
