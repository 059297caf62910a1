//! Label space, windowed instances and feature selection.
//!
//! A [`WindowedInstance`] holds the K+1 most recent observations of one
//! vehicle travelling in one direction, oldest first, together with the
//! delay status observed Δt later. Models never see the instance directly;
//! they consume the [`FeatureVector`] produced by a [`FeatureSelector`].
//!
//! Vector layout (fixed, oldest → newest):
//!
//! * `Delays`: `d_0, …, d_K` in seconds
//! * `Coords`: `lat_0, lon_0, …, lat_K, lon_K` in degrees
//! * `All`: the `Coords` block followed by the `Delays` block

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three-valued delay status. The declaration order is the encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayLabel {
    BeforeTime,
    OnTime,
    Delayed,
}

impl DelayLabel {
    pub const ALL: [DelayLabel; 3] = [DelayLabel::BeforeTime, DelayLabel::OnTime, DelayLabel::Delayed];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL.get(index).copied().ok_or(Error::LabelOutOfRange(index))
    }

    /// Thresholds a signed schedule deviation: `delayed` above `threshold`,
    /// `before_time` below `-threshold`, `on_time` otherwise.
    pub fn from_delay(delay_seconds: f64, threshold: f64) -> Self {
        if delay_seconds > threshold {
            DelayLabel::Delayed
        } else if delay_seconds < -threshold {
            DelayLabel::BeforeTime
        } else {
            DelayLabel::OnTime
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DelayLabel::BeforeTime => "before_time",
            DelayLabel::OnTime => "on_time",
            DelayLabel::Delayed => "delayed",
        }
    }
}

impl fmt::Display for DelayLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn encode_label(label: DelayLabel) -> usize {
    label.index()
}

pub fn decode_label(index: usize) -> Result<DelayLabel> {
    DelayLabel::from_index(index)
}

/// Index of the largest score, ties resolved toward the lowest index.
pub fn argmax_label(scores: &[f64; 3]) -> DelayLabel {
    let mut best = 0;
    for c in 1..3 {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    DelayLabel::ALL[best]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedInstance {
    pub vehicle_id: String,
    pub direction: String,
    /// Unix seconds of the newest step.
    pub t: i64,
    /// Capture time of each step, oldest first. Empty for instances that
    /// were not assembled from timestamped records.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<i64>,
    pub coords: Vec<[f64; 2]>,
    pub delays: Vec<f64>,
    pub statuses: Vec<DelayLabel>,
    pub label: DelayLabel,
}

impl WindowedInstance {
    /// Number of lagged steps, i.e. `K` for a window of `K + 1` steps.
    pub fn lags(&self) -> usize {
        self.coords.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let steps = self.coords.len();
        if steps == 0 {
            return Err(Error::InvalidInstance("window has no steps".into()));
        }
        if !self.times.is_empty() && self.times.len() != steps {
            return Err(Error::InvalidInstance(format!(
                "window has {} steps but {} timestamps",
                steps,
                self.times.len()
            )));
        }
        if self.delays.len() != steps || self.statuses.len() != steps {
            return Err(Error::InvalidInstance(format!(
                "window lengths differ: coords={}, delays={}, statuses={}",
                steps,
                self.delays.len(),
                self.statuses.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    /// Builds a vector, rejecting NaN and infinities.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(pos));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSelector {
    All,
    Coords,
    #[default]
    Delays,
}

impl FeatureSelector {
    /// Vector length for windows with `lags` lagged steps.
    pub fn arity(self, lags: usize) -> usize {
        let steps = lags + 1;
        match self {
            FeatureSelector::All => 3 * steps,
            FeatureSelector::Coords => 2 * steps,
            FeatureSelector::Delays => steps,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSelector::All => "all",
            FeatureSelector::Coords => "coords",
            FeatureSelector::Delays => "delays",
        }
    }

    pub fn select(self, w: &WindowedInstance) -> Result<FeatureVector> {
        select_features(w, self)
    }
}

impl fmt::Display for FeatureSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(FeatureSelector::All),
            "coords" => Ok(FeatureSelector::Coords),
            "delays" => Ok(FeatureSelector::Delays),
            other => Err(Error::InvalidConfig(format!("unknown selector '{other}'"))),
        }
    }
}

pub fn select_features(w: &WindowedInstance, sel: FeatureSelector) -> Result<FeatureVector> {
    w.validate()?;
    let mut values = Vec::with_capacity(sel.arity(w.lags()));
    if matches!(sel, FeatureSelector::All | FeatureSelector::Coords) {
        for [lat, lon] in &w.coords {
            values.push(*lat);
            values.push(*lon);
        }
    }
    if matches!(sel, FeatureSelector::All | FeatureSelector::Delays) {
        values.extend_from_slice(&w.delays);
    }
    FeatureVector::new(values)
}
