//! Still-image-to-video prediction.
//!
//! Two-phase pipeline: a 3D conditional VAE predicts a volume of backward
//! optical flows from a single starting frame, then a flow-grounded generator
//! synthesizes future frames by warping the previous frame and generating the
//! residual appearance. Includes synthetic ground-truth data, training,
//! inference, baselines and an evaluation suite.
//!
//! All numerics are generic over the scalar type (`f32`/`f64`) through the
//! [`Scalar`] trait; the concrete aliases below fix the default precision used
//! by training and the CLI.

pub mod data;
pub mod error;
pub mod eval;
pub mod flow;
pub mod flow2rgb;
pub mod nn;
pub mod pipeline;
pub mod scalar;
pub mod types;
pub mod vae;
pub mod warp;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type for training and the CLI.
pub type Real = f32;

pub type Frame32 = types::Frame<f32>;
pub type FlowField32 = types::FlowField<f32>;
pub type FlowVolume32 = types::FlowVolume<f32>;
pub type VideoClip32 = types::VideoClip<f32>;
