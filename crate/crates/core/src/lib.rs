//! Scalable video encoder kernel with an exhaustive rate-distortion mode
//! decision and a fast, neighbour-driven alternative.

pub mod cli;
pub mod encoder;
pub mod error;
pub mod fmd;
pub mod gop;
pub mod metrics;
pub mod predict;
pub mod rd;
pub mod synth;
pub mod yuv;

pub use encoder::{encode_sequence, EncodeOutput, EncoderConfig, Policy};
pub use error::{Error, Result};
