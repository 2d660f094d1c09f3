use std::path::Path;

use geojson::{GeoJson, Geometry, GeometryValue, PolygonType};

use super::IoError;
use crate::geometry::{GeoMap, PolygonMap};

fn exterior(poly: &PolygonType, rings: &mut Vec<Vec<[f64; 2]>>) -> Result<(), String> {
    let Some(outer) = poly.first() else { return Ok(()) };
    let ring = outer
        .iter()
        .map(|p| match p.as_slice() {
            [lon, lat, ..] => Ok([*lon, *lat]),
            _ => Err("position with fewer than two coordinates".to_string()),
        })
        .collect::<Result<Vec<_>, _>>()?;
    rings.push(ring);
    Ok(())
}

fn collect(geom: &Geometry, rings: &mut Vec<Vec<[f64; 2]>>) -> Result<(), String> {
    match &geom.value {
        GeometryValue::Polygon { coordinates } => exterior(coordinates, rings),
        GeometryValue::MultiPolygon { coordinates } => coordinates.iter().try_for_each(|p| exterior(p, rings)),
        GeometryValue::GeometryCollection { geometries } => geometries.iter().try_for_each(|g| collect(g, rings)),
        other => {
            log::warn!("skipping {} geometry in land map", other.type_name());
            Ok(())
        }
    }
}

/// Land polygons from GeoJSON text. Exterior rings of every Polygon and
/// MultiPolygon are kept; holes and other geometry types are ignored.
pub fn parse_map_geojson(text: &str) -> Result<GeoMap, String> {
    let gj: GeoJson = text.parse().map_err(|e: geojson::Error| e.to_string())?;
    let mut rings = Vec::new();
    match &gj {
        GeoJson::Geometry(g) => collect(g, &mut rings)?,
        GeoJson::Feature(f) => {
            if let Some(g) = &f.geometry {
                collect(g, &mut rings)?;
            }
        }
        GeoJson::FeatureCollection(fc) => {
            for g in fc.features.iter().filter_map(|f| f.geometry.as_ref()) {
                collect(g, &mut rings)?;
            }
        }
    }
    if let Some(bad) = rings.iter().flatten().find(|[lon, lat]| !(-180.0..=180.0).contains(lon) || !(-90.0..=90.0).contains(lat)) {
        return Err(format!("vertex {bad:?} is not a [lon, lat] position in degrees"));
    }
    PolygonMap::new(rings, "EPSG:4326").map(GeoMap).map_err(|e| e.to_string())
}

pub fn load_map_geojson(path: &Path) -> Result<GeoMap, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    parse_map_geojson(&text).map_err(|msg| IoError::format(path, msg))
}
