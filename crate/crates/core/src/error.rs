use std::io;

use thiserror::Error;

/// Errors raised by the engine and the run harness.
#[derive(Debug, Error)]
pub enum HtbError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter or config key violates its constraint. `key` is the
    /// dotted config path (e.g. `model.rho`).
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("simulation diverged on path {path} at step {step}")]
    SimulationDiverged { path: usize, step: usize },

    #[error("log-density overflow on path {path} at step {step}")]
    DensityOverflow { path: usize, step: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl HtbError {
    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        HtbError::InvalidParameter { key: key.into(), reason: reason.into() }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        HtbError::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, HtbError>;
