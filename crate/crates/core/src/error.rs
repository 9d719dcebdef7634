//! Error type shared by all modules.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// A parameter or input failed validation. The message names the
    /// offending field.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Two containers that must have matching lengths do not.
    #[error("length mismatch: {context} ({left} vs {right})")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// The adaptive integrator could not continue. This is a diagnostic
    /// (stiffness/blow-up suspected), not a claim of physical explosion.
    #[error("integration failed at t = {t}: {reason}; last valid state kept")]
    Integration { t: f64, reason: String },

    /// A quadrature did not reach the requested accuracy.
    #[error("quadrature did not converge: achieved error bound {achieved:e} > requested {requested:e}")]
    QuadratureAccuracy { achieved: f64, requested: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
