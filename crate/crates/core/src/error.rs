use thiserror::Error;

/// Errors produced while building or evaluating process models.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric input violates its domain (negative rate, probability outside [0, 1], ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The parameters are valid for the process but the requested construction is
    /// undefined there (identical generator states when both rates coincide).
    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    /// Orthonormal completion of the unitary lost rank.
    #[error("unitary completion failed: {0}")]
    Completion(String),

    /// A simulation start state outside the machine's state space.
    #[error("invalid state {state}: machine has {states} states")]
    InvalidState { state: usize, states: usize },

    /// Malformed serialized input.
    #[error("decode error: {0}")]
    Decode(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
