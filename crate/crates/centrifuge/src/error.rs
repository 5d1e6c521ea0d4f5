//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A precondition on user input was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The adaptive integrator could not proceed.
    #[error("integration failed at tau = {tau}: {reason}")]
    Integration { tau: f64, reason: String },

    /// A classical trajectory approached a coordinate singularity.
    #[error("pole singularity at tau = {tau}: |sin(theta)| = {sin_theta:e}")]
    PoleSingularity { tau: f64, sin_theta: f64 },

    /// A request exceeded a hard size limit.
    #[error("{context}: size {size} exceeds limit {limit}")]
    TooLarge {
        context: &'static str,
        size: usize,
        limit: usize,
    },

    /// An ensemble member failed; carries the member identity.
    #[error("ensemble member (l0={l0}, m0={m0}) failed: {source}")]
    Member {
        l0: u32,
        m0: i32,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
