//! The data-cleaning autoencoder.
//!
//! The input (plus Gaussian noise during training) feeds several parallel
//! channels, each a three-layer stack `D → D → N → D` with one fixed activation.
//! The channel outputs are merged by an affine layer into `D` logits, and a
//! softmax per attribute slice turns those into cleaned pmfs. Gradients are
//! derived by hand and checked against finite differences in the tests.

pub mod activation;
pub mod adam;
pub mod checkpoint;
mod network;
mod params;

pub use activation::{Activation, ActivationRegistry, DEFAULT_CHANNELS};
pub use adam::{AdamConfig, AdamState};
pub use network::{ChannelTrace, DcaeParams, ForwardTrace, Objective, SeedUse};
pub use params::{Architecture, ParamSet, DEFAULT_ACTIVITY_L2, DEFAULT_NOISE_COEF};
