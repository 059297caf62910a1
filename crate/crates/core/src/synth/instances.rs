//! Labelled instance streams with a controlled concept change.
//!
//! Each instance is an independent vehicle snapshot: a current delay, a
//! trend, `K + 1` lagged delays along that trend and coordinates that carry
//! no signal. Before `flip_at` the future delay extrapolates the trend;
//! from `flip_at` on it follows `retention * d + trend_gain * trend * Δt +
//! offset`, by default a reversed trend, so a model frozen on the first
//! regime goes stale.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sub_rng;
use crate::error::{Error, Result};
use crate::features::{DelayLabel, WindowedInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftStreamConfig {
    pub seed: u64,
    pub n_instances: usize,
    pub lags: usize,
    pub step_s: i64,
    pub horizon_s: i64,
    pub threshold_s: f64,
    /// First instance (1-based) generated by the second regime.
    pub flip_at: Option<usize>,
    /// Spread of current delays, s.
    pub delay_sd_s: f64,
    /// Spread of trends, s per s.
    pub trend_sd: f64,
    /// Noise on lagged delays, s.
    pub lag_noise_s: f64,
    /// Noise on the future delay, s.
    pub outcome_noise_s: f64,
    /// Second regime coefficients.
    pub retention: f64,
    pub trend_gain: f64,
    pub offset_s: f64,
    pub coord_sd_deg: f64,
}

impl Default for DriftStreamConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_instances: 10_000,
            lags: 5,
            step_s: 60,
            horizon_s: 300,
            threshold_s: 60.0,
            flip_at: Some(5000),
            delay_sd_s: 90.0,
            trend_sd: 0.25,
            lag_noise_s: 5.0,
            outcome_noise_s: 20.0,
            retention: 1.0,
            trend_gain: -1.0,
            offset_s: 0.0,
            coord_sd_deg: 0.01,
        }
    }
}

pub fn drift_stream(cfg: &DriftStreamConfig) -> Result<Vec<WindowedInstance>> {
    let sd = |v: f64, name: &str| {
        Normal::new(0.0, v).map_err(|_| Error::InvalidConfig(format!("drift stream {name} must be >= 0")))
    };
    let delay = sd(cfg.delay_sd_s, "delay_sd_s")?;
    let trend = sd(cfg.trend_sd, "trend_sd")?;
    let lag_noise = sd(cfg.lag_noise_s, "lag_noise_s")?;
    let outcome_noise = sd(cfg.outcome_noise_s, "outcome_noise_s")?;
    let coord = sd(cfg.coord_sd_deg, "coord_sd_deg")?;
    let mut rng = sub_rng(cfg.seed, 0);

    let steps = cfg.lags + 1;
    let mut out = Vec::with_capacity(cfg.n_instances);
    for i in 1..=cfg.n_instances {
        let d_now = delay.sample(&mut rng);
        let slope = trend.sample(&mut rng);
        let delays: Vec<f64> = (0..steps)
            .map(|k| {
                let back = ((cfg.lags - k) as i64 * cfg.step_s) as f64;
                let noise = if k == cfg.lags { 0.0 } else { lag_noise.sample(&mut rng) };
                d_now - slope * back + noise
            })
            .collect();
        let coords = (0..steps)
            .map(|_| [52.23 + coord.sample(&mut rng), 21.01 + coord.sample(&mut rng)])
            .collect();
        let flipped = cfg.flip_at.is_some_and(|f| i >= f);
        let future = if flipped {
            cfg.retention * d_now + cfg.trend_gain * slope * cfg.horizon_s as f64 + cfg.offset_s
        } else {
            d_now + slope * cfg.horizon_s as f64
        } + outcome_noise.sample(&mut rng);

        out.push(WindowedInstance {
            vehicle_id: format!("s{}", cfg.seed),
            direction: "A".into(),
            t: i as i64 * cfg.step_s,
            times: Vec::new(),
            statuses: delays.iter().map(|&d| DelayLabel::from_delay(d, cfg.threshold_s)).collect(),
            delays,
            coords,
            label: DelayLabel::from_delay(future, cfg.threshold_s),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let cfg = DriftStreamConfig {
            n_instances: 200,
            ..DriftStreamConfig::default()
        };
        let a = drift_stream(&cfg).unwrap();
        assert_eq!(a, drift_stream(&cfg).unwrap());
        assert_eq!(a.len(), 200);
        assert!(a.iter().all(|w| w.delays.len() == 6 && w.coords.len() == 6 && w.validate().is_ok()));
    }

    #[test]
    fn all_classes_present_in_both_regimes() {
        let s = drift_stream(&DriftStreamConfig::default()).unwrap();
        for half in [&s[..4999], &s[4999..]] {
            for c in DelayLabel::ALL {
                let share = half.iter().filter(|w| w.label == c).count() as f64 / half.len() as f64;
                assert!(share > 0.05, "{c} share {share}");
            }
        }
    }
}
