//! Deterministic synthetic substrate: a tram network with timetables,
//! vehicles whose delay follows a mean-reverting walk with regime switches,
//! noisy GPS captures, latency and a poller that re-serves stale records.
//! Also generates labelled instance streams directly, bypassing fusion.
//!
//! Every random quantity comes from its own ChaCha stream derived from the
//! master seed: one for the network and, per vehicle, one each for the delay
//! walk, GPS noise and latency.

mod instances;
pub mod latency;
pub mod network;

use std::collections::BTreeMap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DelayLabel;
use crate::fusion::geo::{LatLon, EARTH_RADIUS_M};
use crate::fusion::timetable::Stop;
use crate::fusion::LocationRecord;

pub use instances::{drift_stream, DriftStreamConfig};
pub use latency::{LatencyConfig, LatencyModel};
pub use network::{generate_network, Network, NetworkConfig, VehicleBlock};

const NETWORK_STREAM: u64 = 0;
const STREAMS_PER_VEHICLE: u64 = 3;
/// A delay can change by at most this fraction of elapsed time, so vehicles
/// never move backwards along their block.
const MAX_DELAY_RATE: f64 = 0.8;

pub(crate) fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Discrete Ornstein-Uhlenbeck step: `d += θ(μ - d)Δ + σ√Δ ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelayRegime {
    /// Reversion rate θ, 1/s.
    pub reversion_rate: f64,
    /// Noise scale σ, s/√s.
    pub noise_scale: f64,
    /// Long-run mean μ, s.
    pub mean_s: f64,
}

impl Default for DelayRegime {
    fn default() -> Self {
        Self {
            reversion_rate: 1.0 / 1800.0,
            noise_scale: 3.0,
            mean_s: 0.0,
        }
    }
}

impl DelayRegime {
    fn validate(&self) -> Result<()> {
        if !(self.reversion_rate >= 0.0 && self.noise_scale >= 0.0 && self.mean_s.is_finite()) {
            return Err(Error::InvalidConfig("delay regime parameters must be finite and non-negative".into()));
        }
        Ok(())
    }

    fn step(&self, d: f64, dt: f64, xi: f64) -> f64 {
        let inc = self.reversion_rate * (self.mean_s - d) * dt + self.noise_scale * dt.sqrt() * xi;
        d + inc.clamp(-MAX_DELAY_RATE * dt, MAX_DELAY_RATE * dt)
    }
}

/// Switches every vehicle to `regime` from `at_s` seconds after service start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftEvent {
    pub at_s: i64,
    pub regime: DelayRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpsNoise {
    /// Per-axis standard deviation, metres.
    pub sigma_m: f64,
    pub spike_probability: f64,
    pub spike_m: f64,
}

impl Default for GpsNoise {
    fn default() -> Self {
        Self {
            sigma_m: 5.0,
            spike_probability: 0.002,
            spike_m: 1000.0,
        }
    }
}

impl GpsNoise {
    pub fn none() -> Self {
        Self {
            sigma_m: 0.0,
            spike_probability: 0.0,
            spike_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_lines: usize,
    pub n_vehicles_per_line: usize,
    /// Unix time of the first departure.
    pub service_start: i64,
    pub poll_period_s: i64,
    pub network: NetworkConfig,
    pub latency: LatencyConfig,
    pub delay: DelayRegime,
    pub drift_events: Vec<DriftEvent>,
    pub gps: GpsNoise,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_lines: 2,
            n_vehicles_per_line: 6,
            service_start: 1_700_000_400,
            poll_period_s: 30,
            network: NetworkConfig::default(),
            latency: LatencyConfig::default(),
            delay: DelayRegime::default(),
            drift_events: Vec::new(),
            gps: GpsNoise::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_lines == 0 || self.n_vehicles_per_line == 0 {
            return Err(Error::InvalidConfig("synth needs at least one line and one vehicle".into()));
        }
        if self.poll_period_s <= 0 {
            return Err(Error::InvalidConfig("synth.poll_period_s must be positive".into()));
        }
        self.network.validate()?;
        LatencyModel::new(&self.latency)?;
        self.delay.validate()?;
        for e in &self.drift_events {
            e.regime.validate()?;
        }
        let g = &self.gps;
        if !(g.sigma_m >= 0.0 && g.spike_m >= 0.0 && (0.0..=1.0).contains(&g.spike_probability)) {
            return Err(Error::InvalidConfig("synth.gps parameters out of range".into()));
        }
        Ok(())
    }

    fn regime_at(&self, t: i64) -> &DelayRegime {
        let elapsed = t - self.service_start;
        self.drift_events
            .iter()
            .filter(|e| e.at_s <= elapsed)
            .max_by_key(|e| e.at_s)
            .map_or(&self.delay, |e| &e.regime)
    }
}

/// True state of one vehicle at one capture time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthPoint {
    pub vehicle_id: String,
    pub line: String,
    pub direction: String,
    pub t: i64,
    pub lat: f64,
    pub lon: f64,
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    points: Vec<TruthPoint>,
    by_vehicle: BTreeMap<String, Range<usize>>,
}

impl GroundTruth {
    fn from_points(points: Vec<TruthPoint>) -> Self {
        let mut by_vehicle: BTreeMap<String, Range<usize>> = BTreeMap::new();
        for (k, p) in points.iter().enumerate() {
            by_vehicle.entry(p.vehicle_id.clone()).or_insert(k..k).end = k + 1;
        }
        Self { points, by_vehicle }
    }

    pub fn points(&self) -> &[TruthPoint] {
        &self.points
    }

    pub fn get(&self, vehicle_id: &str, t: i64) -> Result<&TruthPoint> {
        let outside = || Error::OutsideSimulation {
            vehicle_id: vehicle_id.to_string(),
            t,
        };
        let range = self.by_vehicle.get(vehicle_id).ok_or_else(outside)?;
        let pts = &self.points[range.clone()];
        pts.binary_search_by_key(&t, |p| p.t).map(|k| &pts[k]).map_err(|_| outside())
    }

    pub fn label(&self, vehicle_id: &str, t: i64, threshold_s: f64) -> Result<DelayLabel> {
        Ok(DelayLabel::from_delay(self.get(vehicle_id, t)?.delay_s, threshold_s))
    }
}

/// True delay status of every simulated `(vehicle, t)`.
pub fn label_oracle(truth: &GroundTruth, threshold_s: f64) -> BTreeMap<(String, i64), DelayLabel> {
    truth
        .points
        .iter()
        .map(|p| ((p.vehicle_id.clone(), p.t), DelayLabel::from_delay(p.delay_s, threshold_s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDay {
    /// Records in receive order, including re-served copies.
    pub records: Vec<LocationRecord>,
    pub truth: GroundTruth,
    /// Number of distinct captures.
    pub captures: usize,
}

/// Position after `offset_s` seconds of a trip along `stops`.
fn position_on(stops: &[Stop], offset_s: f64) -> LatLon {
    let k = stops.partition_point(|s| s.offset_s <= offset_s).clamp(1, stops.len() - 1) - 1;
    let (a, b) = (&stops[k], &stops[k + 1]);
    let f = ((offset_s - a.offset_s) / (b.offset_s - a.offset_s)).clamp(0.0, 1.0);
    LatLon::new(a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon))
}

fn displace(p: LatLon, east_m: f64, north_m: f64) -> LatLon {
    LatLon::new(
        p.lat + (north_m / EARTH_RADIUS_M).to_degrees(),
        p.lon + (east_m / (EARTH_RADIUS_M * p.lat.to_radians().cos())).to_degrees(),
    )
}

struct Capture {
    record: LocationRecord,
    visible_at: i64,
}

fn simulate_vehicle(
    cfg: &SynthConfig,
    net: &Network,
    latency: &LatencyModel,
    g: usize,
    block: &VehicleBlock,
) -> Result<(Vec<TruthPoint>, Vec<Capture>)> {
    let base = 1 + g as u64 * STREAMS_PER_VEHICLE;
    let mut delay_rng = sub_rng(cfg.seed, base);
    let mut noise_rng = sub_rng(cfg.seed, base + 1);
    let mut latency_rng = sub_rng(cfg.seed, base + 2);
    let gps = Normal::new(0.0, cfg.gps.sigma_m).map_err(|e| Error::InvalidConfig(format!("gps noise: {e}")))?;

    let route = |dir: &str| {
        net.timetable
            .routes
            .iter()
            .find(|r| r.line == block.line && r.direction == dir)
            .ok_or_else(|| Error::UnknownRoute {
                line: block.line.clone(),
                direction: dir.to_string(),
            })
    };
    let (fwd, rev) = (route(network::FORWARD)?, route(network::REVERSE)?);

    let trip = net.trip_duration_s;
    let end = block.trips as f64 * trip;
    let dt = cfg.poll_period_s as f64;
    let mut truth = Vec::new();
    let mut captures = Vec::new();
    let mut d = 0.0;
    let mut t = block.start;
    loop {
        let s = (t - block.start) as f64 - d;
        if s >= end {
            break;
        }
        let m = ((s / trip) as usize).min(block.trips - 1);
        let dir = network::direction_of_trip(m);
        let stops = if dir == network::FORWARD { &fwd.stops } else { &rev.stops };
        let pos = position_on(stops, s - m as f64 * trip);
        truth.push(TruthPoint {
            vehicle_id: block.vehicle_id.clone(),
            line: block.line.clone(),
            direction: dir.to_string(),
            t,
            lat: pos.lat,
            lon: pos.lon,
            delay_s: d,
        });

        let mut seen = displace(pos, gps.sample(&mut noise_rng), gps.sample(&mut noise_rng));
        let spike: f64 = noise_rng.random();
        let bearing: f64 = noise_rng.random_range(0.0..std::f64::consts::TAU);
        if spike < cfg.gps.spike_probability {
            seen = displace(seen, cfg.gps.spike_m * bearing.cos(), cfg.gps.spike_m * bearing.sin());
        }
        let lag = latency.sample(&mut latency_rng);
        captures.push(Capture {
            record: LocationRecord {
                vehicle_id: block.vehicle_id.clone(),
                line: block.line.clone(),
                direction: dir.to_string(),
                t_c: t,
                t_r: t + lag,
                lat: seen.lat,
                lon: seen.lon,
            },
            visible_at: t + lag,
        });

        let xi: f64 = StandardNormal.sample(&mut delay_rng);
        d = cfg.regime_at(t).step(d, dt, xi);
        t += cfg.poll_period_s;
    }
    Ok((truth, captures))
}

/// At every poll, serves each capture that became visible since the
/// previous poll, then re-serves the newest visible capture if it was not
/// among them. Polling stops once the vehicle's last capture can no longer
/// arrive.
fn poll(cfg: &SynthConfig, captures: &[Capture], max_latency: i64) -> Vec<LocationRecord> {
    let Some(last) = captures.last() else {
        return Vec::new();
    };
    let horizon = last.record.t_c + max_latency;
    let grid_up = |t: i64| {
        let k = (t - cfg.service_start).div_euclid(cfg.poll_period_s);
        let g = cfg.service_start + k * cfg.poll_period_s;
        if g < t {
            g + cfg.poll_period_s
        } else {
            g
        }
    };
    let mut by_visibility: Vec<&Capture> = captures.iter().collect();
    by_visibility.sort_by_key(|c| (c.visible_at, c.record.t_c));

    let serve = |c: &Capture, tau: i64| LocationRecord {
        t_r: tau,
        ..c.record.clone()
    };
    let mut served = Vec::new();
    let mut next = 0;
    let mut newest: Option<&Capture> = None;
    let mut tau = grid_up(by_visibility[0].visible_at);
    while tau <= horizon {
        let mut fresh_newest = false;
        while next < by_visibility.len() && by_visibility[next].visible_at <= tau {
            let c = by_visibility[next];
            served.push(serve(c, tau));
            if newest.is_none_or(|n| c.record.t_c > n.record.t_c) {
                newest = Some(c);
                fresh_newest = true;
            }
            next += 1;
        }
        if let (Some(c), false) = (newest, fresh_newest) {
            served.push(serve(c, tau));
        }
        tau += cfg.poll_period_s;
    }
    served
}

/// Simulates every vehicle of `net` and merges the served records by
/// `(t_R, vehicle_id)`.
pub fn simulate_day(cfg: &SynthConfig, net: &Network) -> Result<SimulatedDay> {
    cfg.validate()?;
    let latency = LatencyModel::new(&cfg.latency)?;
    let per_vehicle: Vec<(Vec<TruthPoint>, Vec<LocationRecord>, usize)> = net
        .blocks
        .par_iter()
        .enumerate()
        .map(|(g, b)| {
            let (truth, captures) = simulate_vehicle(cfg, net, &latency, g, b)?;
            let served = poll(cfg, &captures, latency.max());
            Ok((truth, served, captures.len()))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut records = Vec::new();
    let mut captures = 0;
    for (t, r, c) in per_vehicle {
        points.extend(t);
        records.extend(r);
        captures += c;
    }
    points.sort_by(|a, b| a.vehicle_id.cmp(&b.vehicle_id).then(a.t.cmp(&b.t)));
    records.sort_by(|a, b| a.t_r.cmp(&b.t_r).then_with(|| a.vehicle_id.cmp(&b.vehicle_id)));
    Ok(SimulatedDay {
        records,
        truth: GroundTruth::from_points(points),
        captures,
    })
}
