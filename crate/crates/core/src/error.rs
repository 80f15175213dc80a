use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("boundary collapse at step {step} (t = {time}): h = {value}")]
    BoundaryCollapse { step: usize, time: f64, value: f64 },

    #[error("fixed-point iteration did not converge at step {step} (t = {time}), last update {update:e}")]
    Stepping { step: usize, time: f64, update: f64 },

    #[error("compatibility violated: {0}")]
    Compatibility(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
