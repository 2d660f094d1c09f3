use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::extract::{Encounter, EncounterLabel};
use crate::geometry::{project_local, GeoOrigin, ShipState};

pub const AIS_COLUMNS: [&str; 8] = ["encounter_id", "role", "mmsi", "timestamp", "lat", "lon", "sog_mps", "cog_deg"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Reference,
    Obstacle,
}

/// One AIS position report. `timestamp` is in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AisRecord {
    pub encounter_id: String,
    pub role: Role,
    pub mmsi: String,
    pub timestamp: f64,
    pub lat: f64,
    pub lon: f64,
    pub sog_mps: f64,
    pub cog_deg: f64,
}

impl AisRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.encounter_id.trim().is_empty() {
            return Err("empty encounter_id".into());
        }
        if !self.timestamp.is_finite() {
            return Err(format!("timestamp {} is not finite", self.timestamp));
        }
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(format!("lat {} outside [-90, 90]", self.lat));
        }
        if !(-180.0..=180.0).contains(&self.lon) {
            return Err(format!("lon {} outside [-180, 180]", self.lon));
        }
        if !(self.sog_mps.is_finite() && self.sog_mps >= 0.0) {
            return Err(format!("sog_mps {} must be finite and non-negative", self.sog_mps));
        }
        if !self.cog_deg.is_finite() {
            return Err(format!("cog_deg {} is not finite", self.cog_deg));
        }
        Ok(())
    }
}

/// Label file that sits next to a corpus: `foo.csv` pairs with `foo.labels.csv`.
pub fn labels_path(corpus: &Path) -> PathBuf {
    let stem = corpus.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    corpus.with_file_name(format!("{stem}.labels.csv"))
}

fn open(path: &Path) -> Result<csv::Reader<File>, IoError> {
    let file = File::open(path).map_err(|e| IoError::file(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

/// Rows of `path` as `T`, checking that `columns` are present. An empty
/// file has no rows.
fn read_rows<T: serde::de::DeserializeOwned>(path: &Path, columns: &[&str]) -> Result<Vec<(u64, T)>, IoError> {
    let mut rdr = open(path)?;
    let headers = rdr.headers().map_err(|e| IoError::format(path, e))?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Ok(Vec::new());
    }
    for c in columns {
        if !headers.iter().any(|h| h == *c) {
            return Err(IoError::MissingColumn { path: path.to_path_buf(), column: c.to_string() });
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::Row { path: path.to_path_buf(), line, msg: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: T = rec
            .deserialize(Some(&headers))
            .map_err(|e| IoError::Row { path: path.to_path_buf(), line, msg: e.to_string() })?;
        rows.push((line, row));
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct LabelRow {
    encounter_id: String,
    label: String,
}

pub fn load_labels(path: &Path) -> Result<HashMap<String, EncounterLabel>, IoError> {
    let mut out = HashMap::new();
    for (line, row) in read_rows::<LabelRow>(path, &["encounter_id", "label"])? {
        let label = row
            .label
            .parse()
            .map_err(|e: crate::extract::ExtractError| IoError::Row { path: path.to_path_buf(), line, msg: e.to_string() })?;
        out.insert(row.encounter_id, label);
    }
    Ok(out)
}

/// Time-sorted track with repeated timestamps removed (first kept).
fn clean_track(id: &str, role: &str, mut recs: Vec<AisRecord>) -> Vec<AisRecord> {
    if recs.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        log::warn!("encounter {id}: {role} reports out of time order; sorting");
    }
    recs.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    let before = recs.len();
    recs.dedup_by(|b, a| a.timestamp == b.timestamp);
    if recs.len() < before {
        log::warn!("encounter {id}: dropped {} {role} reports with repeated timestamps", before - recs.len());
    }
    recs
}

fn single_mmsi(path: &Path, id: &str, role: &str, recs: &[AisRecord]) -> Result<(), IoError> {
    let mut ids: Vec<&str> = recs.iter().map(|r| r.mmsi.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    match ids.len() {
        1 => Ok(()),
        0 => Err(IoError::format(path, format!("encounter {id} has no {role} reports"))),
        n => Err(IoError::format(path, format!("encounter {id} has {n} {role} vessels, expected one"))),
    }
}

/// Reads an AIS corpus and its label file if one exists. Each encounter is
/// projected to local metres about the first reference position.
pub fn load_ais_csv(path: &Path) -> Result<Vec<Encounter>, IoError> {
    let rows = read_rows::<AisRecord>(path, &AIS_COLUMNS)?;
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, (Vec<AisRecord>, Vec<AisRecord>)> = HashMap::new();
    for (line, rec) in rows {
        rec.validate().map_err(|msg| IoError::Row { path: path.to_path_buf(), line, msg })?;
        let entry = grouped.entry(rec.encounter_id.clone()).or_insert_with(|| {
            order.push(rec.encounter_id.clone());
            Default::default()
        });
        match rec.role {
            Role::Reference => entry.0.push(rec),
            Role::Obstacle => entry.1.push(rec),
        }
    }
    let labels_file = labels_path(path);
    let mut labels = if labels_file.exists() { load_labels(&labels_file)? } else { HashMap::new() };
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let (reference, obstacle) = grouped.remove(&id).expect("grouped by id");
        single_mmsi(path, &id, "reference", &reference)?;
        single_mmsi(path, &id, "obstacle", &obstacle)?;
        let reference = clean_track(&id, "reference", reference);
        let obstacle = clean_track(&id, "obstacle", obstacle);
        let origin = GeoOrigin { lat: reference[0].lat, lon: reference[0].lon };
        let local = |recs: &[AisRecord]| -> Vec<ShipState> {
            recs.iter()
                .map(|r| {
                    let [x, y] = project_local(origin, r.lat, r.lon);
                    ShipState::from_compass(r.timestamp, x, y, r.sog_mps, r.cog_deg)
                })
                .collect()
        };
        out.push(Encounter {
            label: labels.remove(&id),
            reference: local(&reference),
            obstacle: local(&obstacle),
            origin: Some(origin),
            id,
        });
    }
    for id in labels.keys() {
        log::warn!("label for unknown encounter {id} ignored");
    }
    Ok(out)
}

pub fn write_ais_csv(path: &Path, records: &[AisRecord]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| IoError::format(path, e))?;
    if records.is_empty() {
        w.write_record(AIS_COLUMNS).map_err(|e| IoError::format(path, e))?;
    }
    for r in records {
        w.serialize(r).map_err(|e| IoError::format(path, e))?;
    }
    w.flush().map_err(|e| IoError::file(path, e))
}
