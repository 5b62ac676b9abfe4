//! Layout-to-image denoising diffusion.
//!
//! A layout — labeled bounding boxes with a padding convention — is turned
//! into global conditions (object representations and predicted
//! probabilistic masks) that drive every decoder block of a diffusion
//! U-Net through edge-aware normalization and styled-mask attention. The
//! crate ships the full pipeline at desk scale: a deterministic synthetic
//! shapes dataset, training with EMA and checkpointing, classifier-free
//! guided ancestral sampling, and proxy evaluation metrics.

pub mod coco;
pub mod conditioning;
pub mod error;
pub mod gradcheck;
pub mod imgio;
pub mod layout;
pub mod nn;
pub mod shapes;

pub use error::{Error, Result};
