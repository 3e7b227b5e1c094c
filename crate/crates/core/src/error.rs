use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("frame mismatch: expected {expected} frame, found {found}")]
    FrameMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("pulses overlap at this scan frequency/width: free interval {interval:e} s <= 0")]
    Overlap { interval: f64 },

    #[error("heterodyne validity violated: {0}")]
    Heterodyne(String),

    #[error("no dip: {0}")]
    NoDip(String),

    #[error("numerical failure at step {step} (t = {time:e} s): {detail}")]
    Numerical {
        step: usize,
        time: f64,
        detail: String,
    },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
