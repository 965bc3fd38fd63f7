use thiserror::Error;

/// Errors raised by the path-integral engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid time slicing: {0}")]
    InvalidSlicing(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: operands live on different spatial grids")]
    GridMismatch,

    #[error("observable `{0}` is not Hermitian")]
    NotHermitian(String),

    #[error("non-finite matrix entry after {step} ladder steps")]
    NonFinite { step: usize },

    #[error("norm decayed to {norm:.6} at t = {time:.6} (step {step}); boundary leakage suspected")]
    NormDecay { step: usize, time: f64, norm: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no tunnelling event: {0}")]
    NoTunnelEvent(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by user input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidSlicing(_)
                | Error::InvalidParameter(_)
                | Error::GridMismatch
                | Error::NotHermitian(_)
                | Error::Config(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
