use nalgebra::DVector;
use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    /// The state became NaN or infinite. `last_state` is the last finite state.
    #[error("integration diverged at t = {t}")]
    Divergence { t: f64, last_state: DVector<f64> },

    #[error("step size underflow at t = {t} (dt = {dt:e}); problem is likely stiff")]
    Stiffness { t: f64, dt: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}

pub(crate) fn contract_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
