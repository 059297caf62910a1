//! Small-scale geodesy: great-circle distance and a local planar frame.

use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

/// Haversine distance in metres.
pub fn haversine_m(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Equirectangular projection around a fixed origin. The map is affine in
/// `(lat, lon)`, so straight lines in degrees stay straight in metres and
/// ratios along them are preserved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    origin: LatLon,
    cos_lat: f64,
}

impl LocalFrame {
    pub fn new(origin: LatLon) -> Self {
        Self {
            origin,
            cos_lat: origin.lat.to_radians().cos(),
        }
    }

    pub fn to_xy(&self, p: LatLon) -> [f64; 2] {
        [
            EARTH_RADIUS_M * (p.lon - self.origin.lon).to_radians() * self.cos_lat,
            EARTH_RADIUS_M * (p.lat - self.origin.lat).to_radians(),
        ]
    }

    pub fn to_latlon(&self, xy: [f64; 2]) -> LatLon {
        LatLon {
            lat: self.origin.lat + (xy[1] / EARTH_RADIUS_M).to_degrees(),
            lon: self.origin.lon + (xy[0] / (EARTH_RADIUS_M * self.cos_lat)).to_degrees(),
        }
    }
}

/// Closest point of segment `ab` to `p`: `(distance, fraction along ab)`.
pub fn project_on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let f = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a[0] + f * dx, a[1] + f * dy);
    (((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt(), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_degree_of_latitude() {
        let d = haversine_m(LatLon::new(52.0, 21.0), LatLon::new(53.0, 21.0));
        let expected = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        assert!((d - expected).abs() < 1e-6);
    }

    #[test]
    fn frame_round_trip() {
        let f = LocalFrame::new(LatLon::new(52.23, 21.01));
        let p = LatLon::new(52.241, 20.987);
        let q = f.to_latlon(f.to_xy(p));
        assert!((p.lat - q.lat).abs() < 1e-12 && (p.lon - q.lon).abs() < 1e-12);
    }

    #[test]
    fn frame_agrees_with_haversine_locally() {
        let o = LatLon::new(52.23, 21.01);
        let f = LocalFrame::new(o);
        let p = f.to_latlon([300.0, 400.0]);
        assert!((haversine_m(o, p) - 500.0).abs() < 0.05);
    }

    #[test]
    fn segment_projection() {
        let (d, f) = project_on_segment([5.0, 3.0], [0.0, 0.0], [10.0, 0.0]);
        assert_eq!((d, f), (3.0, 0.5));
        let (d, f) = project_on_segment([-4.0, 3.0], [0.0, 0.0], [10.0, 0.0]);
        assert_eq!((d, f), (5.0, 0.0));
    }
}
