use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum FlagError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("scale out of range: {0}")]
    Range(String),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("Neumann series diverges: contraction probe {contraction:.4} >= 1, use a larger N")]
    Divergence { contraction: f64 },

    #[error("Neumann series did not converge in {iterations} iterations (last relative increment {increment:.3e})")]
    Convergence { iterations: usize, increment: f64 },

    #[error("kernel error: {0}")]
    Kernel(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FlagError>;
