//! Route geometry, scheduled passage offsets and trip starts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geo::{project_on_segment, LatLon, LocalFrame};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    /// Scheduled seconds after the trip start.
    pub offset_s: f64,
}

/// One (line, direction): the stop sequence, which is also the route
/// polyline, and the unix start time of every scheduled trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub line: String,
    pub direction: String,
    pub stops: Vec<Stop>,
    pub trip_starts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timetable {
    pub routes: Vec<Route>,
}

impl Route {
    pub fn validate(&self) -> Result<()> {
        let name = format!("{}/{}", self.line, self.direction);
        if self.stops.len() < 2 {
            return Err(Error::InvalidConfig(format!("route {name} needs at least two stops")));
        }
        if self.stops.windows(2).any(|w| !(w[1].offset_s > w[0].offset_s)) {
            return Err(Error::InvalidConfig(format!("route {name}: offsets must strictly increase")));
        }
        if self.stops.iter().any(|s| !(s.lat.is_finite() && s.lon.is_finite() && s.offset_s.is_finite())) {
            return Err(Error::InvalidConfig(format!("route {name}: non-finite stop")));
        }
        if self.trip_starts.is_empty() {
            return Err(Error::InvalidConfig(format!("route {name} has no trips")));
        }
        if self.trip_starts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig(format!("route {name}: trip starts must strictly increase")));
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.stops.last().map_or(0.0, |s| s.offset_s) - self.stops[0].offset_s
    }
}

impl Timetable {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.routes {
            r.validate()?;
            if !seen.insert((r.line.as_str(), r.direction.as_str())) {
                return Err(Error::InvalidConfig(format!("duplicate route {}/{}", r.line, r.direction)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let tt: Timetable = serde_json::from_str(s)?;
        tt.validate()?;
        Ok(tt)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn index(&self) -> Result<TimetableIndex> {
        self.validate()?;
        let routes = self
            .routes
            .iter()
            .map(|r| ((r.line.clone(), r.direction.clone()), RouteMatcher::new(r.clone())))
            .collect();
        Ok(TimetableIndex { routes })
    }
}

/// Where a position falls on a route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteMatch {
    pub distance_m: f64,
    pub segment: usize,
    pub fraction: f64,
    /// Scheduled offset at the matched point, linearly interpolated between stops.
    pub offset_s: f64,
}

#[derive(Debug, Clone)]
pub struct RouteMatcher {
    route: Route,
    frame: LocalFrame,
    xy: Vec<[f64; 2]>,
}

impl RouteMatcher {
    pub fn new(route: Route) -> Self {
        let frame = LocalFrame::new(LatLon::new(route.stops[0].lat, route.stops[0].lon));
        let xy = route.stops.iter().map(|s| frame.to_xy(LatLon::new(s.lat, s.lon))).collect();
        Self { route, frame, xy }
    }

    pub fn route(&self) -> &Route {
        &self.route
    }

    /// Nearest segment wins; the first one on ties.
    pub fn locate(&self, p: LatLon) -> RouteMatch {
        let q = self.frame.to_xy(p);
        let mut best: Option<(f64, usize, f64)> = None;
        for k in 0..self.xy.len() - 1 {
            let (d, f) = project_on_segment(q, self.xy[k], self.xy[k + 1]);
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, k, f));
            }
        }
        let (distance_m, segment, fraction) = best.expect("route has a segment");
        let (a, b) = (self.route.stops[segment].offset_s, self.route.stops[segment + 1].offset_s);
        RouteMatch {
            distance_m,
            segment,
            fraction,
            offset_s: a + fraction * (b - a),
        }
    }

    /// Trip start minimizing `|t - start - offset|`, the earliest on ties.
    pub fn nearest_trip(&self, t: f64, offset_s: f64) -> f64 {
        let starts = &self.route.trip_starts;
        let target = t - offset_s;
        let k = starts.partition_point(|&s| s < target);
        let mut best = None::<f64>;
        for j in [k.wrapping_sub(1), k] {
            if let Some(&s) = starts.get(j) {
                if best.is_none_or(|b| (target - s).abs() < (target - b).abs()) {
                    best = Some(s);
                }
            }
        }
        best.expect("route has a trip")
    }
}

#[derive(Debug, Clone)]
pub struct TimetableIndex {
    routes: BTreeMap<(String, String), RouteMatcher>,
}

impl TimetableIndex {
    pub fn route(&self, line: &str, direction: &str) -> Result<&RouteMatcher> {
        self.routes
            .get(&(line.to_string(), direction.to_string()))
            .ok_or_else(|| Error::UnknownRoute {
                line: line.to_string(),
                direction: direction.to_string(),
            })
    }
}
