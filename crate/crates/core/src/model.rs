//! Model traits used by the prequential runner.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{argmax_label, DelayLabel, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: DelayLabel,
    /// Class scores in label order; nonnegative and summing to one.
    pub scores: [f64; 3],
}

impl Prediction {
    pub fn from_scores(scores: [f64; 3]) -> Self {
        Self {
            label: argmax_label(&scores),
            scores,
        }
    }
}

/// A model that predicts and then learns from every labelled instance.
pub trait StreamModel {
    fn predict(&self, x: &FeatureVector) -> Result<Prediction>;
    fn learn(&mut self, x: &FeatureVector, y: DelayLabel) -> Result<()>;
}

/// A frozen model produced by a [`BatchTrainer`].
pub trait BatchModel {
    fn predict(&self, x: &FeatureVector) -> Result<Prediction>;
}

pub trait BatchTrainer {
    type Model: BatchModel;

    fn train(&self, data: &[(FeatureVector, DelayLabel)]) -> Result<Self::Model>;
}
