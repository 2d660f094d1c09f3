#![allow(dead_code)]

use std::path::Path;

use vessel_intent::geometry::{math_to_compass, unproject_local, GeoOrigin, ShipState};
use vessel_intent::io::{write_ais_csv, AisRecord, Role};

pub const ORIGIN: GeoOrigin = GeoOrigin { lat: 63.44, lon: 10.40 };

/// `n` samples `dt` apart on a straight line.
pub fn straight(t0: f64, x: f64, y: f64, sog: f64, course_deg: f64, n: usize, dt: f64) -> Vec<ShipState> {
    let s = ShipState::from_compass(t0, x, y, sog, course_deg);
    (0..n).map(|k| s.propagate(t0 + k as f64 * dt)).collect()
}

pub fn records(id: &str, role: Role, mmsi: &str, origin: GeoOrigin, track: &[ShipState]) -> Vec<AisRecord> {
    track
        .iter()
        .map(|s| {
            let (lat, lon) = unproject_local(origin, s.x, s.y);
            AisRecord {
                encounter_id: id.into(),
                role,
                mmsi: mmsi.into(),
                timestamp: s.t,
                lat,
                lon,
                sog_mps: s.sog,
                cog_deg: math_to_compass(s.cog),
            }
        })
        .collect()
}

/// Corpus file with one reference and one obstacle per encounter; the
/// reference starts at `ORIGIN`.
pub fn write_corpus(path: &Path, encounters: &[(&str, Vec<ShipState>, Vec<ShipState>)]) {
    let mut all = Vec::new();
    for (id, r, o) in encounters {
        all.extend(records(id, Role::Reference, "257000001", ORIGIN, r));
        all.extend(records(id, Role::Obstacle, "257000002", ORIGIN, o));
    }
    write_ais_csv(path, &all).unwrap();
}

/// GeoJSON polygon from local rectangles about `ORIGIN`.
pub fn geojson_rects(rects: &[[f64; 4]]) -> String {
    let polys: Vec<String> = rects
        .iter()
        .map(|&[x0, y0, x1, y1]| {
            let pts: Vec<String> = [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
                .iter()
                .map(|&[x, y]| {
                    let (lat, lon) = unproject_local(ORIGIN, x, y);
                    format!("[{lon},{lat}]")
                })
                .collect();
            format!(
                r#"{{"type":"Feature","properties":{{}},"geometry":{{"type":"Polygon","coordinates":[[{}]]}}}}"#,
                pts.join(",")
            )
        })
        .collect();
    format!(r#"{{"type":"FeatureCollection","features":[{}]}}"#, polys.join(","))
}
