//! Toolkit for plant leaf disease classification experiments.
//!
//! The crate is split by pipeline stage:
//!
//! - [`tensorkit`]: SiLU, channel attention and parameter accounting for the
//!   attention-augmented DenseNet201 head.
//! - [`augment`]: deterministic color, noise and geometric augmentation plus
//!   plan generation.
//! - [`manifest`]: the JSON Lines image manifest shared by the pipeline.
//! - [`dataset`]: source merging, class cleanup, stratified splits and
//!   balancing.
//! - [`metrics`]: confusion matrices, macro metrics and leaderboards.
//! - [`protoclass`]: nearest-prototype one/few-shot classification.
//! - [`harness`]: the transfer-learning then fine-tuning control loop over an
//!   abstract trainer.

pub mod augment;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod manifest;
pub mod metrics;
pub mod protoclass;
mod seed;
pub mod tensorkit;

pub use error::{Error, Result};
pub use seed::derive_seed;
