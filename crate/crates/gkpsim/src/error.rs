//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GkpError {
    /// A Fock cutoff or mode shape does not satisfy an operation's
    /// requirements (e.g. `dim < 2` for ladder operators).
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Non-finite entries, non-Hermitian Hamiltonians and similar malformed
    /// numerical inputs.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter is outside its documented domain.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// Operands have incompatible shapes.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A postselection branch has vanishing norm, so the conditioned state
    /// is undefined.
    #[error("degenerate postselection: {0}")]
    DegeneratePostselection(String),

    /// A requested target is unreachable for the given hardware parameters
    /// (e.g. a displacement distance beyond `2 * alpha_d`).
    #[error("unreachable target: {0}")]
    Unreachable(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GkpError>;
