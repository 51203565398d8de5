//! Cleaning noisy probabilistic tables with a denoising autoencoder.
//!
//! Every cell of a table holds a probability mass function over its attribute's
//! categories (continuous attributes are quantized into bins first). A
//! multi-channel autoencoder trained with a Jensen-Shannon loss maps corrupted
//! records back toward clean ones.

pub mod corrupt;
pub mod dcae;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod pdb;
pub mod pipeline;
pub mod quantize;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
