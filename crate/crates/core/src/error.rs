use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("time {t} is before the validity start {t0} of the reference profile")]
    OutOfValidity { t: f64, t0: f64 },

    /// A sampled pair rate exceeded the thinning majorant. The cached speed
    /// bound is stale.
    #[error("majorant violated: pair rate {rate} exceeds bound {bound}")]
    MajorantViolation { rate: f64, bound: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("sampler failed: {0}")]
    Sampling(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
