//! Local equirectangular projection about a fixed origin.

use serde::{Deserialize, Serialize};

use super::PolygonMap;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoOrigin {
    pub lat: f64,
    pub lon: f64,
}

/// Degrees to local metres (x east, y north).
pub fn project_local(origin: GeoOrigin, lat: f64, lon: f64) -> [f64; 2] {
    let x = EARTH_RADIUS_M * origin.lat.to_radians().cos() * (lon - origin.lon).to_radians();
    let y = EARTH_RADIUS_M * (lat - origin.lat).to_radians();
    [x, y]
}

/// Inverse of [`project_local`], returning `(lat, lon)` in degrees.
pub fn unproject_local(origin: GeoOrigin, x: f64, y: f64) -> (f64, f64) {
    let lat = origin.lat + (y / EARTH_RADIUS_M).to_degrees();
    let lon = origin.lon + (x / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    (lat, lon)
}

/// Land polygons with `[lon, lat]` vertices in degrees.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeoMap(pub PolygonMap);

impl GeoMap {
    /// Vertices in local metres about `origin`.
    pub fn project(&self, origin: GeoOrigin) -> PolygonMap {
        let mut local = self.0.map_vertices(|[lon, lat]| project_local(origin, lat, lon));
        local.crs = format!("local:{},{}", origin.lat, origin.lon);
        local
    }
}
