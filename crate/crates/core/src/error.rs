//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero-area pixel rectangle ({w}x{h}) rejected")]
    ZeroAreaBox { w: f64, h: f64 },

    #[error("layout holds {given} objects but capacity is {n_max}")]
    LayoutCapacity { given: usize, n_max: usize },

    #[error("category {category} out of range (max {max})")]
    CategoryRange { category: usize, max: usize },

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("timestep {t} out of range [1, {t_max}]")]
    TimestepRange { t: usize, t_max: usize },

    #[error("annotation parse error in record {record}: {reason}")]
    Annotation { record: String, reason: String },

    #[error("box sampling failed after {retries} retries")]
    BoxSampling { retries: usize },

    #[error("non-finite loss at step {step}; diagnostics written to {dump}")]
    NonFiniteLoss { step: usize, dump: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
