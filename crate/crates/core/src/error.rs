//! Error type shared by all simulator modules.

use thiserror::Error;

/// Errors produced by reservoir construction, simulation and training.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (empty range, bad length, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Matrix or vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Power iteration did not reach the requested tolerance.
    #[error("spectral radius estimate did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// A reservoir could not be built from the requested parameters.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Integration step too large for the fastest time constant.
    #[error("integration step {step} exceeds stability limit {limit}")]
    StepTooCoarse { step: f64, limit: f64 },

    /// A state or weight left the finite range; `context` names the first bad point.
    #[error("diverged: {0}")]
    Diverged(String),

    /// A linear system is singular or numerically unreliable.
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    /// NMSE is undefined for a constant target.
    #[error("target variance is zero; normalized error is undefined")]
    ZeroVariance,

    /// Non-finite values where finite ones are required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
