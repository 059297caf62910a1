//! Short-term delay prediction for public-transport vehicles.
//!
//! The crate turns noisy, latency-afflicted vehicle location records into
//! windowed instances ([`fusion`]), classifies them with a Hoeffding tree
//! ([`hoeffding`]), a batch-trained perceptron ([`mlp`]) or a hybrid that
//! switches between the two on sliding-window accuracy ([`csann`]), and
//! reports cumulative accuracy ([`report`]). [`synth`] generates
//! deterministic test networks, trajectories and instance streams.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csann;
pub mod error;
pub mod features;
pub mod fusion;
pub mod hoeffding;
pub mod mlp;
pub mod model;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
pub use features::{DelayLabel, FeatureSelector, FeatureVector, WindowedInstance};
