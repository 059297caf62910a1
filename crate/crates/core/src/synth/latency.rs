//! Transmission latency `t_R - t_C` as a discretized, truncated gamma shape.

use rand::Rng;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConfig {
    /// Most frequent latency, seconds.
    pub mode_s: i64,
    /// Largest possible latency, seconds.
    pub max_s: i64,
    /// Gamma shape; larger is more peaked.
    pub shape: f64,
    /// Resolution of the distribution, seconds.
    pub bin_s: i64,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        Self {
            mode_s: 180,
            max_s: 480,
            shape: 8.0,
            bin_s: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LatencyModel {
    support: Vec<i64>,
    probs: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl LatencyModel {
    pub fn new(cfg: &LatencyConfig) -> Result<Self> {
        if cfg.bin_s <= 0 || cfg.max_s < 0 || cfg.mode_s < 0 || cfg.mode_s > cfg.max_s {
            return Err(Error::InvalidConfig(
                "latency needs bin_s > 0 and 0 <= mode_s <= max_s".into(),
            ));
        }
        if cfg.mode_s % cfg.bin_s != 0 || cfg.max_s % cfg.bin_s != 0 {
            return Err(Error::InvalidConfig("latency mode_s and max_s must be multiples of bin_s".into()));
        }
        if !(cfg.shape > 1.0) {
            return Err(Error::InvalidConfig("latency shape must be > 1".into()));
        }
        let support: Vec<i64> = (0..=cfg.max_s / cfg.bin_s).map(|b| b * cfg.bin_s).collect();
        let weights: Vec<f64> = if cfg.mode_s == 0 {
            support.iter().map(|&x| (-(x as f64) / cfg.bin_s as f64).exp()).collect()
        } else {
            let k = cfg.shape;
            let scale = cfg.mode_s as f64 / (k - 1.0);
            // unnormalized log-density, shifted so the mode has weight 1
            let log_pdf = |x: f64| (k - 1.0) * x.ln() - x / scale;
            let peak = log_pdf(cfg.mode_s as f64);
            support
                .iter()
                .map(|&x| if x == 0 { 0.0 } else { (log_pdf(x as f64) - peak).exp() })
                .collect()
        };
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let index = WeightedIndex::new(&weights).map_err(|e| Error::InvalidConfig(format!("latency weights: {e}")))?;
        Ok(Self { support, probs, index })
    }

    /// `(latency, probability)` for every bin.
    pub fn pmf(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn max(&self) -> i64 {
        *self.support.last().expect("support is non-empty")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.support[self.index.sample(rng)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pmf_sums_to_one_within_support() {
        let m = LatencyModel::new(&LatencyConfig::default()).unwrap();
        let total: f64 = m.pmf().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(m.pmf().all(|(x, p)| (0..=480).contains(&x) && p >= 0.0));
        let (mode, _) = m.pmf().fold((0, 0.0), |b, (x, p)| if p > b.1 { (x, p) } else { b });
        assert_eq!(mode, 180);
    }

    #[test]
    fn zero_latency_is_a_point_mass() {
        let cfg = LatencyConfig {
            mode_s: 0,
            max_s: 0,
            ..LatencyConfig::default()
        };
        let m = LatencyModel::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| m.sample(&mut rng) == 0));
    }

    #[test]
    fn rejects_mode_above_max() {
        let cfg = LatencyConfig {
            mode_s: 600,
            ..LatencyConfig::default()
        };
        assert!(LatencyModel::new(&cfg).is_err());
    }
}
