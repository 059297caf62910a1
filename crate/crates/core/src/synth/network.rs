//! Random tram lines, their timetables and vehicle blocks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sub_rng, SynthConfig, NETWORK_STREAM};
use crate::error::{Error, Result};
use crate::fusion::geo::{LatLon, LocalFrame};
use crate::fusion::timetable::{Route, Stop, Timetable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub stops_per_route: usize,
    pub stop_spacing_m: f64,
    /// Each segment heads east give or take this many degrees.
    pub bearing_jitter_deg: f64,
    /// North-south offset between the first stops of consecutive lines.
    pub line_spacing_m: f64,
    pub nominal_speed_kmh: f64,
    pub trips_per_vehicle: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            origin_lat: 52.23,
            origin_lon: 21.01,
            stops_per_route: 30,
            stop_spacing_m: 450.0,
            bearing_jitter_deg: 25.0,
            line_spacing_m: 2000.0,
            nominal_speed_kmh: 20.0,
            trips_per_vehicle: 24,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stops_per_route < 2 {
            return Err(Error::InvalidConfig("network.stops_per_route must be >= 2".into()));
        }
        if !(self.stop_spacing_m > 0.0 && self.nominal_speed_kmh > 0.0) {
            return Err(Error::InvalidConfig("network spacing and speed must be positive".into()));
        }
        if !(0.0..90.0).contains(&self.bearing_jitter_deg) {
            return Err(Error::InvalidConfig("network.bearing_jitter_deg must be in [0, 90)".into()));
        }
        if !(self.line_spacing_m >= 0.0) {
            return Err(Error::InvalidConfig("network.line_spacing_m must be >= 0".into()));
        }
        if self.trips_per_vehicle == 0 {
            return Err(Error::InvalidConfig("network.trips_per_vehicle must be >= 1".into()));
        }
        if !(self.origin_lat.abs() < 80.0 && self.origin_lon.abs() <= 180.0) {
            return Err(Error::InvalidConfig("network origin out of range".into()));
        }
        Ok(())
    }
}

/// One vehicle's day: back-to-back trips alternating between the forward
/// (`A`) and reverse (`B`) direction of its line, starting with `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleBlock {
    pub vehicle_id: String,
    pub line: String,
    pub start: i64,
    pub trips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub timetable: Timetable,
    pub blocks: Vec<VehicleBlock>,
    /// Length of every trip, seconds.
    pub trip_duration_s: f64,
}

pub const FORWARD: &str = "A";
pub const REVERSE: &str = "B";

pub fn line_name(l: usize) -> String {
    format!("L{}", l + 1)
}

pub fn direction_of_trip(m: usize) -> &'static str {
    if m.is_multiple_of(2) {
        FORWARD
    } else {
        REVERSE
    }
}

fn route_points(cfg: &NetworkConfig, line: usize, rng: &mut ChaCha8Rng) -> Vec<LatLon> {
    let frame = LocalFrame::new(LatLon::new(cfg.origin_lat, cfg.origin_lon));
    let mut xy = [0.0, line as f64 * cfg.line_spacing_m];
    let mut pts = vec![frame.to_latlon(xy)];
    for _ in 1..cfg.stops_per_route {
        let jitter = if cfg.bearing_jitter_deg > 0.0 {
            rng.random_range(-cfg.bearing_jitter_deg..=cfg.bearing_jitter_deg)
        } else {
            0.0
        };
        let heading = jitter.to_radians();
        xy = [xy[0] + cfg.stop_spacing_m * heading.cos(), xy[1] + cfg.stop_spacing_m * heading.sin()];
        pts.push(frame.to_latlon(xy));
    }
    pts
}

fn stops(line: &str, dir: &str, pts: &[LatLon], spacing_m: f64, speed: f64) -> Vec<Stop> {
    pts.iter()
        .enumerate()
        .map(|(k, p)| Stop {
            id: format!("{line}-{dir}-{k:02}"),
            lat: p.lat,
            lon: p.lon,
            offset_s: k as f64 * spacing_m / speed,
        })
        .collect()
}

/// Builds lines, timetables and blocks. Vehicles of a line start one
/// headway apart, the headway being a round trip divided by the fleet size
/// and rounded down to the poll grid.
pub fn generate_network(cfg: &SynthConfig) -> Result<Network> {
    cfg.validate()?;
    let net = &cfg.network;
    let mut rng = sub_rng(cfg.seed, NETWORK_STREAM);
    let speed = net.nominal_speed_kmh / 3.6;
    let trip_duration_s = (net.stops_per_route - 1) as f64 * net.stop_spacing_m / speed;
    let fleet = cfg.n_vehicles_per_line;
    let headway = ((2.0 * trip_duration_s / fleet as f64) as i64 / cfg.poll_period_s).max(1) * cfg.poll_period_s;

    let mut routes = Vec::new();
    let mut blocks = Vec::new();
    for l in 0..cfg.n_lines {
        let line = line_name(l);
        let forward = route_points(net, l, &mut rng);
        let reverse: Vec<LatLon> = forward.iter().rev().copied().collect();

        let line_blocks: Vec<VehicleBlock> = (0..fleet)
            .map(|v| VehicleBlock {
                vehicle_id: format!("{line}-V{:02}", v + 1),
                line: line.clone(),
                start: cfg.service_start + v as i64 * headway,
                trips: net.trips_per_vehicle,
            })
            .collect();

        for (dir, pts) in [(FORWARD, &forward), (REVERSE, &reverse)] {
            let mut trip_starts: Vec<f64> = line_blocks
                .iter()
                .flat_map(|b| {
                    (0..b.trips)
                        .filter(|m| direction_of_trip(*m) == dir)
                        .map(move |m| b.start as f64 + m as f64 * trip_duration_s)
                })
                .collect();
            trip_starts.sort_by(f64::total_cmp);
            routes.push(Route {
                line: line.clone(),
                direction: dir.to_string(),
                stops: stops(&line, dir, pts, net.stop_spacing_m, speed),
                trip_starts,
            });
        }
        blocks.extend(line_blocks);
    }
    let timetable = Timetable { routes };
    timetable.validate()?;
    Ok(Network {
        timetable,
        blocks,
        trip_duration_s,
    })
}
