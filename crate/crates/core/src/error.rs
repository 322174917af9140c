use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("solvability condition violated: source mean {mean:e} is not zero")]
    Solvability { mean: f64 },

    #[error("path values unavailable in white-noise mode")]
    ValuesUnavailable,

    #[error("series truncation too short: relative size of last term {relative:e} exceeds {tolerance:e}")]
    Truncation { relative: f64, tolerance: f64 },

    #[error("series and integral representations disagree: relative difference {relative:e}")]
    RepresentationMismatch { relative: f64 },

    #[error("fitting window spans {length} time units, need at least {required}")]
    WindowTooShort { length: f64, required: f64 },

    #[error("path too short: t = {t} but at least {required} is needed")]
    PathTooShort { t: f64, required: f64 },

    #[error("value {value} outside the domain {domain}")]
    OutOfDomain { value: f64, domain: &'static str },

    #[error("singular covariance: {0}")]
    Singular(String),

    #[error("inconsistent moments: {0}")]
    InconsistentMoments(String),

    #[error("not enough samples: got {got}, need at least {required}")]
    InsufficientSamples { got: usize, required: usize },

    #[error("moment function pole crossed at s = {s}")]
    PoleCrossing { s: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
