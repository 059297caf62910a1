//! Raw location records to the enriched stream U and on to windowed instances.
//!
//! Stages, each a pure function of its input:
//!
//! 1. [`deduplicate`] keeps the first-received copy of every `(vehicle, t_C)`.
//! 2. [`denoise`] holds points that imply an impossible speed and snaps
//!    jitter of parked vehicles to a fixed position.
//! 3. [`enrich`] matches every point to its route and scheduled trip and
//!    derives delay and movement status.
//! 4. [`build_windows`] assembles lag windows with a label `Δt` ahead.

pub mod geo;
pub mod timetable;
mod windows;

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DelayLabel, WindowedInstance};
use geo::{haversine_m, LatLon};
use timetable::{Timetable, TimetableIndex};

pub use windows::{build_windows, WindowConfig, WindowStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub vehicle_id: String,
    pub line: String,
    pub direction: String,
    /// Capture time on the vehicle, unix seconds.
    pub t_c: i64,
    /// Receive time at the backend, unix seconds.
    pub t_r: i64,
    pub lat: f64,
    pub lon: f64,
}

impl LocationRecord {
    pub fn position(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_r < self.t_c {
            return Err(Error::InvalidInstance(format!(
                "record of {} received at {} before capture at {}",
                self.vehicle_id, self.t_r, self.t_c
            )));
        }
        if !(self.lat.is_finite() && self.lon.is_finite()) {
            return Err(Error::InvalidInstance(format!(
                "record of {} at {} has non-finite coordinates",
                self.vehicle_id, self.t_c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementStatus {
    Moving,
    Stationary,
}

/// One element of stream U.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedInstance {
    pub vehicle_id: String,
    pub line: String,
    pub direction: String,
    pub t_c: i64,
    pub t_r: i64,
    pub lat: f64,
    pub lon: f64,
    pub movement_status: MovementStatus,
    pub delay_seconds: f64,
    pub delay_status: DelayLabel,
    /// Start of the scheduled trip the record was matched to.
    pub trip_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Speed above which a displacement is treated as a GPS error.
    pub max_speed_kmh: f64,
    /// Displacement below which a moving vehicle is considered parked.
    pub jitter_m: f64,
    /// Displacement that marks a vehicle as moving again.
    pub moving_m: f64,
    /// Look-back for movement status.
    pub movement_lookback_s: i64,
    /// Delay status threshold θ.
    pub delay_threshold_s: f64,
    /// Records farther than this from their route are dropped.
    pub max_route_distance_m: f64,
    pub window: WindowConfig,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            max_speed_kmh: 90.0,
            jitter_m: 15.0,
            moving_m: 25.0,
            movement_lookback_s: 60,
            delay_threshold_s: 60.0,
            max_route_distance_m: 200.0,
            window: WindowConfig::default(),
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_speed_kmh", self.max_speed_kmh),
            ("jitter_m", self.jitter_m),
            ("moving_m", self.moving_m),
            ("max_route_distance_m", self.max_route_distance_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("fusion.{name} must be positive")));
            }
        }
        if self.moving_m < self.jitter_m {
            return Err(Error::InvalidConfig("fusion.moving_m must be >= fusion.jitter_m".into()));
        }
        if self.movement_lookback_s <= 0 {
            return Err(Error::InvalidConfig("fusion.movement_lookback_s must be positive".into()));
        }
        if !(self.delay_threshold_s >= 0.0) {
            return Err(Error::InvalidConfig("fusion.delay_threshold_s must be >= 0".into()));
        }
        self.window.validate()
    }
}

/// Counters for everything the pipeline drops or alters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionStats {
    pub raw_records: u64,
    pub duplicates: u64,
    pub speed_gated: u64,
    pub snapped: u64,
    pub off_route: u64,
    pub enriched: u64,
    pub windows: u64,
    pub windows_skipped: u64,
}

/// Keeps the earliest-received copy of each `(vehicle_id, t_C)`.
/// Output is ordered by `(vehicle_id, t_C)`.
pub fn deduplicate(raw: &[LocationRecord]) -> Vec<LocationRecord> {
    let mut order: Vec<&LocationRecord> = raw.iter().collect();
    order.sort_by_key(|r| r.t_r);
    let mut kept: BTreeMap<(&str, i64), &LocationRecord> = BTreeMap::new();
    for r in order {
        kept.entry((r.vehicle_id.as_str(), r.t_c)).or_insert(r);
    }
    kept.into_values().cloned().collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DenoiseStats {
    pub speed_gated: u64,
    pub snapped: u64,
}

struct Anchor {
    t: i64,
    pos: LatLon,
    stationary: bool,
    sum: [f64; 2],
    n: f64,
}

impl Anchor {
    fn centroid(&self) -> LatLon {
        LatLon::new(self.sum[0] / self.n, self.sum[1] / self.n)
    }

    fn park(&mut self, raw: LatLon) {
        self.stationary = true;
        self.sum = [self.pos.lat + raw.lat, self.pos.lon + raw.lon];
        self.n = 2.0;
    }
}

/// Cleans coordinates of records ordered by `(vehicle_id, t_C)`.
///
/// A point whose displacement from the last accepted position implies a
/// speed above the limit is replaced by that position. A vehicle that moves
/// less than `jitter_m` becomes parked; while parked every point is replaced
/// by the parking position until the vehicle is `moving_m` away from the
/// centroid of its parked readings. A vehicle's first record counts as parked.
pub fn denoise(records: &[LocationRecord], cfg: &FusionConfig) -> (Vec<LocationRecord>, DenoiseStats) {
    let max_speed = cfg.max_speed_kmh / 3.6;
    let mut stats = DenoiseStats::default();
    let mut out = Vec::with_capacity(records.len());
    let mut anchor: Option<(&str, Anchor)> = None;

    for r in records {
        let raw = r.position();
        if anchor.as_ref().is_none_or(|(v, _)| *v != r.vehicle_id) {
            anchor = Some((
                &r.vehicle_id,
                Anchor {
                    t: r.t_c,
                    pos: raw,
                    stationary: true,
                    sum: [raw.lat, raw.lon],
                    n: 1.0,
                },
            ));
            out.push(r.clone());
            continue;
        }
        let (_, a) = anchor.as_mut().expect("anchor set above");

        let dt = (r.t_c - a.t) as f64;
        let step = haversine_m(a.pos, raw);
        let accepted = if dt <= 0.0 || step > max_speed * dt {
            stats.speed_gated += 1;
            a.pos
        } else if a.stationary {
            if haversine_m(a.centroid(), raw) < cfg.moving_m {
                a.sum[0] += raw.lat;
                a.sum[1] += raw.lon;
                a.n += 1.0;
                a.t = r.t_c;
                stats.snapped += (raw != a.pos) as u64;
                a.pos
            } else {
                a.stationary = false;
                a.t = r.t_c;
                a.pos = raw;
                raw
            }
        } else if step < cfg.jitter_m {
            a.park(raw);
            a.t = r.t_c;
            stats.snapped += (raw != a.pos) as u64;
            a.pos
        } else {
            a.t = r.t_c;
            a.pos = raw;
            raw
        };

        let mut clean = r.clone();
        clean.lat = accepted.lat;
        clean.lon = accepted.lon;
        out.push(clean);
    }
    (out, stats)
}

/// Delay of one position against a known trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayReading {
    pub delay_seconds: f64,
    pub delay_status: DelayLabel,
    pub scheduled_offset_s: f64,
    pub distance_m: f64,
}

/// Matches `r` onto its route and compares `t_C` with the scheduled passage
/// of the trip starting at `trip_start`, or of the nearest trip when `None`.
pub fn compute_delay(
    r: &LocationRecord,
    tt: &TimetableIndex,
    trip_start: Option<f64>,
    cfg: &FusionConfig,
) -> Result<(DelayReading, f64)> {
    let route = tt.route(&r.line, &r.direction)?;
    let hit = route.locate(r.position());
    if hit.distance_m > cfg.max_route_distance_m {
        return Err(Error::OffRoute {
            line: r.line.clone(),
            direction: r.direction.clone(),
            distance_m: hit.distance_m,
        });
    }
    let t = r.t_c as f64;
    let start = trip_start.unwrap_or_else(|| route.nearest_trip(t, hit.offset_s));
    let delay = t - (start + hit.offset_s);
    Ok((
        DelayReading {
            delay_seconds: delay,
            delay_status: DelayLabel::from_delay(delay, cfg.delay_threshold_s),
            scheduled_offset_s: hit.offset_s,
            distance_m: hit.distance_m,
        },
        start,
    ))
}

/// Timetable integration for denoised records ordered by `(vehicle_id, t_C)`.
/// Returns the enriched stream and the number of off-route drops.
pub fn enrich(records: &[LocationRecord], tt: &TimetableIndex, cfg: &FusionConfig) -> Result<(Vec<EnrichedInstance>, u64)> {
    let mut out: Vec<EnrichedInstance> = Vec::with_capacity(records.len());
    let mut off_route = 0;
    let mut vehicle_from = 0;
    let mut trip: Option<(String, String, f64)> = None;

    for r in records {
        if out.get(vehicle_from).is_some_and(|e| e.vehicle_id != r.vehicle_id) {
            vehicle_from = out.len();
            trip = None;
        }
        let sticky = match &trip {
            Some((line, dir, start)) if *line == r.line && *dir == r.direction => Some(*start),
            _ => None,
        };
        let (reading, start) = match compute_delay(r, tt, sticky, cfg) {
            Ok(v) => v,
            Err(Error::OffRoute { .. }) => {
                off_route += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        trip = Some((r.line.clone(), r.direction.clone(), start));

        let history = &out[vehicle_from..];
        let cutoff = r.t_c - cfg.movement_lookback_s;
        let k = history.partition_point(|e| e.t_c <= cutoff);
        let movement_status = match k.checked_sub(1).map(|j| &history[j]) {
            Some(prev) if haversine_m(LatLon::new(prev.lat, prev.lon), r.position()) > cfg.moving_m => {
                MovementStatus::Moving
            }
            _ => MovementStatus::Stationary,
        };

        out.push(EnrichedInstance {
            vehicle_id: r.vehicle_id.clone(),
            line: r.line.clone(),
            direction: r.direction.clone(),
            t_c: r.t_c,
            t_r: r.t_r,
            lat: r.lat,
            lon: r.lon,
            movement_status,
            delay_seconds: reading.delay_seconds,
            delay_status: reading.delay_status,
            trip_start: start,
        });
    }
    Ok((out, off_route))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub stream_u: Vec<EnrichedInstance>,
    pub windows: Vec<WindowedInstance>,
    pub stats: FusionStats,
}

/// Runs every stage on a raw record stream.
pub fn fuse(raw: &[LocationRecord], tt: &Timetable, cfg: &FusionConfig) -> Result<FusionOutput> {
    cfg.validate()?;
    for r in raw {
        r.validate()?;
    }
    let index = tt.index()?;
    let unique = deduplicate(raw);
    let (clean, dn) = denoise(&unique, cfg);
    let (stream_u, off_route) = enrich(&clean, &index, cfg)?;
    let (windows, ws) = build_windows(&stream_u, &cfg.window)?;
    let stats = FusionStats {
        raw_records: raw.len() as u64,
        duplicates: (raw.len() - unique.len()) as u64,
        speed_gated: dn.speed_gated,
        snapped: dn.snapped,
        off_route,
        enriched: stream_u.len() as u64,
        windows: ws.emitted,
        windows_skipped: ws.skipped,
    };
    Ok(FusionOutput {
        stream_u,
        windows,
        stats,
    })
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<LocationRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: LocationRecord = row?;
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_records_csv<W: Write>(out: W, records: &[LocationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads CSV when the extension is `.csv`, JSON lines otherwise.
pub fn read_records(path: &Path) -> Result<Vec<LocationRecord>> {
    let file = std::fs::File::open(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_records_csv(std::io::BufReader::new(file))
    } else {
        let records: Vec<LocationRecord> = read_jsonl(std::io::BufReader::new(file))?;
        records.iter().try_for_each(LocationRecord::validate)?;
        Ok(records)
    }
}

pub fn write_jsonl<W: Write, T: Serialize>(mut out: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(input: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
