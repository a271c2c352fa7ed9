use thiserror::Error;

use crate::dynamics::SimState;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("steady state not reached by t = {t:.3e} s (residual {residual:.3e})")]
    Timeout {
        t: f64,
        residual: f64,
        last: Box<SimState>,
    },

    #[error("numerical instability at t = {t:.3e} s: {what}")]
    Instability { t: f64, what: String },

    #[error("no population inversion (rho33 = {rho33:.4e}, rho44 = {rho44:.4e})")]
    NoInversion { rho33: f64, rho44: f64 },

    #[error("self-consistent pulling did not converge after {} iterations", history.len())]
    PullingNotConverged { history: Vec<f64> },

    #[error("no threshold in sweep range: {0}")]
    ThresholdNotFound(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
