use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid grid, catalog or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A requested scale is finer than the grid (or the cascade) can resolve.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A value left the representable range (overflow, underflow, bracket failure).
    #[error("range error: {0}")]
    Range(String),

    /// A function does not satisfy the support requirements of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two grid functions were combined on different grids.
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    /// An exponent sample left `[1, ∞)` or the class `1 < p₋ ≤ p₊ < ∞` was required.
    #[error("invalid exponent: {0}")]
    Exponent(String),

    /// No dyadic sparse family dominates the oscillation of the input.
    #[error(
        "no sparse family dominates |g - Med(g;Q)| on this cube: root needs credit {required:.6e}, \
         has {available:.6e}"
    )]
    DominationInfeasible { required: f64, available: f64 },

    /// An invariant that should hold by construction was broken.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
