use serde::{Deserialize, Serialize};

use super::EnrichedInstance;
use crate::error::{Error, Result};
use crate::features::WindowedInstance;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    /// Lagged steps `K`; a window has `K + 1` steps.
    pub lags: usize,
    /// Step `δt` between window slots, seconds.
    pub step_s: i64,
    /// Prediction horizon `Δt`, seconds.
    pub horizon_s: i64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            lags: 5,
            step_s: 60,
            horizon_s: 300,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_s <= 0 || self.horizon_s <= 0 {
            return Err(Error::InvalidConfig("window step and horizon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowStats {
    pub emitted: u64,
    pub skipped: u64,
}

/// Index of the sample nearest to `target` within `±step/2`, earlier on ties.
fn nearest(times: &[i64], target: i64, step: i64) -> Option<usize> {
    let k = times.partition_point(|&t| t < target);
    let mut best: Option<usize> = None;
    for j in [k.wrapping_sub(1), k] {
        if j < times.len() && best.is_none_or(|b| (times[j] - target).abs() < (times[b] - target).abs()) {
            best = Some(j);
        }
    }
    best.filter(|&j| 2 * (times[j] - target).abs() <= step)
}

/// Emits one window per sample `t` whose slots `t - kδt` (k = K..0) and
/// label slot `t + Δt` each have a distinct sample within `±δt/2`, all from
/// the same contiguous `(vehicle, line, direction)` run. Every other sample
/// is counted as skipped. Output is ordered by `(t, vehicle, direction)`.
pub fn build_windows(u: &[EnrichedInstance], cfg: &WindowConfig) -> Result<(Vec<WindowedInstance>, WindowStats)> {
    cfg.validate()?;
    let mut sorted: Vec<&EnrichedInstance> = u.iter().collect();
    sorted.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id).then(a.t_c.cmp(&b.t_c)));

    let mut out = Vec::new();
    let mut stats = WindowStats::default();
    let same_run = |a: &EnrichedInstance, b: &EnrichedInstance| {
        a.vehicle_id == b.vehicle_id && a.line == b.line && a.direction == b.direction
    };
    for run in sorted.chunk_by(|a, b| same_run(a, b)) {
        let times: Vec<i64> = run.iter().map(|e| e.t_c).collect();
        for (anchor, e) in run.iter().enumerate() {
            let t = e.t_c;
            let slots: Option<Vec<usize>> = (0..=cfg.lags)
                .map(|k| {
                    if k == cfg.lags {
                        Some(anchor)
                    } else {
                        nearest(&times, t - (cfg.lags - k) as i64 * cfg.step_s, cfg.step_s)
                    }
                })
                .collect();
            let label = nearest(&times, t + cfg.horizon_s, cfg.step_s);
            let (Some(mut idx), Some(label)) = (slots, label) else {
                stats.skipped += 1;
                continue;
            };
            idx.push(label);
            if idx.windows(2).any(|w| w[1] <= w[0]) {
                stats.skipped += 1;
                continue;
            }
            idx.pop();
            let steps: Vec<&EnrichedInstance> = idx.iter().map(|&j| run[j]).collect();
            out.push(WindowedInstance {
                vehicle_id: e.vehicle_id.clone(),
                direction: e.direction.clone(),
                t,
                times: steps.iter().map(|s| s.t_c).collect(),
                coords: steps.iter().map(|s| [s.lat, s.lon]).collect(),
                delays: steps.iter().map(|s| s.delay_seconds).collect(),
                statuses: steps.iter().map(|s| s.delay_status).collect(),
                label: run[label].delay_status,
            });
            stats.emitted += 1;
        }
    }
    out.sort_by(|a, b| {
        a.t.cmp(&b.t)
            .then_with(|| a.vehicle_id.cmp(&b.vehicle_id))
            .then_with(|| a.direction.cmp(&b.direction))
    });
    Ok((out, stats))
}
