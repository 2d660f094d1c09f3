use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use super::{ExportFormat, IoError};
use crate::extract::ExtractThresholds;
use crate::geometry::GeometryParams;
use crate::intention::{Discretization, IntentionPriors};
use crate::runtime::{ReplayOptions, SessionConfig, SlicePolicy, StepRecord};
use crate::trajgen::TrajGenParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ReplaySettings {
    /// Time between steps, seconds.
    pub step_s: f64,
    /// Score LOS candidates at every step.
    pub score: bool,
    /// How far into a candidate trajectory it is measured, seconds.
    pub lookahead_s: f64,
}

impl Default for ReplaySettings {
    fn default() -> Self {
        let r = ReplayOptions::default();
        Self { step_s: r.step_s, score: r.score, lookahead_s: SessionConfig::default().lookahead_s }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct MapSettings {
    /// Extra vertices are inserted along land edges at this spacing after
    /// projection, metres. Zero keeps the source vertices only.
    pub densify_m: f64,
}

impl Default for MapSettings {
    fn default() -> Self {
        Self { densify_m: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSettings {
    pub format: ExportFormat,
}

/// Everything a run reads from its TOML file. Missing tables and keys take
/// their defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub priors: IntentionPriors,
    pub discretization: Discretization,
    pub geometry: GeometryParams,
    pub slices: SlicePolicy,
    pub replay: ReplaySettings,
    pub candidates: TrajGenParams,
    pub extract: ExtractThresholds,
    pub map: MapSettings,
    pub export: ExportSettings,
}

impl RunConfig {
    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            priors: self.priors.clone(),
            discretization: self.discretization.clone(),
            geometry: self.geometry.clone(),
            slices: self.slices.clone(),
            lookahead_s: self.replay.lookahead_s,
        }
    }

    pub fn replay_options(&self) -> ReplayOptions {
        ReplayOptions { step_s: self.replay.step_s, score: self.replay.score, candidates: self.candidates.clone() }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.session_config().validate()?;
        self.candidates.validate()?;
        if !(self.replay.step_s.is_finite() && self.replay.step_s > 0.0) {
            return Err(format!("replay.step_s must be positive, got {}", self.replay.step_s));
        }
        let e = &self.extract;
        if !(e.dist_thresh > 0.0 && e.roi_len > 0.0) {
            return Err("extract.dist_thresh and extract.roi_len must be positive".into());
        }
        if !(self.map.densify_m.is_finite() && self.map.densify_m >= 0.0) {
            return Err(format!("map.densify_m must be non-negative, got {}", self.map.densify_m));
        }
        Ok(())
    }

    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self, IoError> {
        let c: RunConfig = toml::from_str(text).map_err(|e| IoError::Config(e.to_string()))?;
        c.validate().map_err(IoError::Config)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            IoError::Config(msg) => IoError::format(path, msg),
            other => other,
        })
    }

    /// Canonical form: every key written, tables in declaration order.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is representable in TOML")
    }
}

/// JSON schema of the run configuration file.
pub fn run_config_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(RunConfig)).expect("schema serializes") + "\n"
}

/// JSON schema of one JSONL export line.
pub fn step_record_schema() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(StepRecord)).expect("schema serializes") + "\n"
}
