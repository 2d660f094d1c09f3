//! Intention priors from a labelled corpus of historical encounters.

mod fit;

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{segment_cpa, sector_ground_distance, GeoMap, GeoOrigin, PolygonMap, ShipState};
use crate::intention::{IntentionPriors, TruncNorm};
use crate::runtime::interpolate_track;

pub use fit::{fit_truncnorm, sample_stats, truncnorm_moments, TruncFit};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExtractError {
    #[error("fit needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {0} is not finite")]
    NonFinite(f64),
    #[error("window [{lo}, {hi}] is empty")]
    BadWindow { lo: f64, hi: f64 },
    #[error("unknown encounter label {0:?}")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncounterLabel {
    HeadOn,
    Overtaking,
    Crossing,
}

impl FromStr for EncounterLabel {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "head-on" | "headon" | "ho" => Ok(Self::HeadOn),
            "overtaking" | "ot" => Ok(Self::Overtaking),
            "crossing" | "cr" => Ok(Self::Crossing),
            _ => Err(ExtractError::UnknownLabel(s.to_string())),
        }
    }
}

impl fmt::Display for EncounterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HeadOn => "head-on",
            Self::Overtaking => "overtaking",
            Self::Crossing => "crossing",
        })
    }
}

/// Reference and obstacle tracks of one recorded encounter, time-sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Encounter {
    pub id: String,
    pub reference: Vec<ShipState>,
    pub obstacle: Vec<ShipState>,
    pub label: Option<EncounterLabel>,
    /// Geographic point the local frame is centred on, when known.
    pub origin: Option<GeoOrigin>,
}

impl Encounter {
    /// Reference samples paired with the obstacle interpolated to the same
    /// time, over the span both tracks cover.
    pub fn paired(&self) -> Vec<(ShipState, ShipState)> {
        self.reference
            .iter()
            .filter_map(|r| interpolate_track(&self.obstacle, r.t).map(|o| (*r, o)))
            .collect()
    }
}

/// Closest approach found in a recorded encounter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncounterCpa {
    pub dcpa: f64,
    /// Seconds after the first reference sample.
    pub tcpa: f64,
    /// Reference sample with the smallest sampled distance.
    pub index: usize,
    /// Smallest sampled distance, before refinement.
    pub sampled_min: f64,
}

fn front_gate(reference: &ShipState, obs: &ShipState) -> Option<f64> {
    let dx = obs.x - reference.x;
    let dy = obs.y - reference.y;
    let d = dx.hypot(dy);
    if d == 0.0 {
        return None;
    }
    let [hx, hy] = reference.heading();
    ((hx * dx + hy * dy) / d > (std::f64::consts::PI / 8.0).cos()).then_some(d)
}

/// Smallest distance at which the obstacle sits dead ahead of the
/// reference, if it ever does.
pub fn encounter_isdf(enc: &Encounter) -> Option<f64> {
    enc.paired().iter().filter_map(|(r, o)| front_gate(r, o)).reduce(f64::min)
}

/// Dead-ahead distances of the crossing encounters.
pub fn find_isdf_vals(encounters: &[Encounter]) -> Vec<f64> {
    encounters
        .par_iter()
        .filter(|e| e.label == Some(EncounterLabel::Crossing))
        .filter_map(encounter_isdf)
        .collect()
}

/// Running minimum of the sampled distance, refined on the segments either
/// side of each new minimum.
pub fn encounter_cpa(enc: &Encounter) -> Option<EncounterCpa> {
    let pairs = enc.paired();
    if pairs.len() < 2 {
        log::warn!("encounter {}: fewer than 2 overlapping samples, skipped", enc.id);
        return None;
    }
    let t0 = enc.reference[0].t;
    let mut best: Option<EncounterCpa> = None;
    for (i, (r, o)) in pairs.iter().enumerate() {
        let d = r.distance_to(o);
        if best.is_some_and(|b| d >= b.sampled_min) {
            continue;
        }
        let mut cpa = EncounterCpa { dcpa: d, tcpa: r.t - t0, index: i, sampled_min: d };
        let segments = [i.checked_sub(1), (i + 1 < pairs.len()).then_some(i)];
        for k in segments.into_iter().flatten() {
            let (a, b) = (&pairs[k], &pairs[k + 1]);
            if let Ok(s) = segment_cpa(&a.0, &b.0, &a.1, &b.1) {
                if s.d_opt < cpa.dcpa {
                    cpa.dcpa = s.d_opt;
                    cpa.tcpa = a.0.t - t0 + s.t_opt;
                }
            }
        }
        best = Some(cpa);
    }
    best
}

/// DCPA and TCPA of every encounter with enough samples.
pub fn find_cpa(encounters: &[Encounter]) -> (Vec<f64>, Vec<f64>) {
    let cpas: Vec<EncounterCpa> = encounters.par_iter().filter_map(encounter_cpa).collect();
    cpas.iter().map(|c| (c.dcpa, c.tcpa)).unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractThresholds {
    /// Ground distances above this are dropped, metres.
    pub dist_thresh: f64,
    /// Side of the square map window around the CPA, metres.
    pub roi_len: f64,
}

impl Default for ExtractThresholds {
    fn default() -> Self {
        Self { dist_thresh: 2000.0, roi_len: 10_000.0 }
    }
}

/// Land map in the local frame of a given encounter.
pub trait MapSource: Sync {
    fn local_map(&self, enc: &Encounter) -> Cow<'_, PolygonMap>;
}

/// Already in the encounters' frame.
impl MapSource for PolygonMap {
    fn local_map(&self, _: &Encounter) -> Cow<'_, PolygonMap> {
        Cow::Borrowed(self)
    }
}

/// Projected about each encounter's origin and densified to `spacing_m`.
pub struct ProjectedMap<'a> {
    pub geo: &'a GeoMap,
    pub spacing_m: f64,
}

impl MapSource for ProjectedMap<'_> {
    fn local_map(&self, enc: &Encounter) -> Cow<'_, PolygonMap> {
        let Some(origin) = enc.origin else {
            log::warn!("encounter {} has no geographic origin; ignoring the map", enc.id);
            return Cow::Owned(PolygonMap::empty());
        };
        let local = self.geo.project(origin);
        Cow::Owned(if self.spacing_m > 0.0 { local.densified(self.spacing_m) } else { local })
    }
}

/// Side and front ground distances of the reference at its sampled CPA,
/// each kept only when within the threshold.
pub fn encounter_ground<M: MapSource + ?Sized>(
    enc: &Encounter,
    map: &M,
    th: &ExtractThresholds,
) -> (Option<f64>, Option<f64>) {
    let Some(cpa) = encounter_cpa(enc) else { return (None, None) };
    let map = map.local_map(enc);
    let s = enc.paired()[cpa.index].0;
    let h = th.roi_len / 2.0;
    let roi = map.clip_to_box([s.x - h, s.y - h], [s.x + h, s.y + h]);
    if roi.is_empty() {
        return (None, None);
    }
    let f = std::f64::consts::PI / 8.0;
    let pi = std::f64::consts::PI;
    let c = s.cog;
    let sb = sector_ground_distance(s.x, s.y, c, &roi, c - pi, c - f);
    let ps = sector_ground_distance(s.x, s.y, c, &roi, c + f, c + pi);
    let fr = sector_ground_distance(s.x, s.y, c, &roi, c - f, c + f);
    let keep = |d: f64| (d <= th.dist_thresh).then_some(d);
    (keep(sb.min(ps)), keep(fr))
}

/// Side and front ground distances at CPA over all encounters.
pub fn find_dist2grd_cpa<M: MapSource + ?Sized>(
    encounters: &[Encounter],
    map: &M,
    th: &ExtractThresholds,
) -> (Vec<f64>, Vec<f64>) {
    let both: Vec<(Option<f64>, Option<f64>)> =
        encounters.par_iter().map(|e| encounter_ground(e, map, th)).collect();
    let sdgs = both.iter().filter_map(|b| b.0).collect();
    let sdgf = both.iter().filter_map(|b| b.1).collect();
    (sdgs, sdgf)
}

/// Raw values pulled out of a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtractionResult {
    pub isdf_vals: Vec<f64>,
    /// DCPA of overtaking encounters.
    pub sd_vals: Vec<f64>,
    /// Half the DCPA of head-on encounters.
    pub sdm_vals: Vec<f64>,
    pub tcpa_vals: Vec<f64>,
    pub sdgs_vals: Vec<f64>,
    pub sdgf_vals: Vec<f64>,
}

#[derive(Default)]
struct PerEncounter {
    isdf: Option<f64>,
    cpa: Option<EncounterCpa>,
    sdgs: Option<f64>,
    sdgf: Option<f64>,
}

pub fn extract_values<M: MapSource + ?Sized>(
    encounters: &[Encounter],
    map: &M,
    th: &ExtractThresholds,
) -> ExtractionResult {
    let per: Vec<(Option<EncounterLabel>, PerEncounter)> = encounters
        .par_iter()
        .map(|e| {
            let isdf = if e.label == Some(EncounterLabel::Crossing) { encounter_isdf(e) } else { None };
            let (sdgs, sdgf) = encounter_ground(e, map, th);
            (e.label, PerEncounter { isdf, cpa: encounter_cpa(e), sdgs, sdgf })
        })
        .collect();
    let mut out = ExtractionResult::default();
    for (label, p) in per {
        out.isdf_vals.extend(p.isdf);
        out.sdgs_vals.extend(p.sdgs);
        out.sdgf_vals.extend(p.sdgf);
        if let Some(c) = p.cpa {
            out.tcpa_vals.push(c.tcpa);
            match label {
                Some(EncounterLabel::Overtaking) => out.sd_vals.push(c.dcpa),
                Some(EncounterLabel::HeadOn) => out.sdm_vals.push(c.dcpa / 2.0),
                _ => {}
            }
        }
    }
    out
}

/// Outcome for one fitted node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeReport {
    pub node: &'static str,
    pub samples: usize,
    /// `None` when the default was kept.
    pub fit: Option<TruncFit>,
    pub used: TruncNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionReport {
    pub encounters: usize,
    pub nodes: Vec<NodeReport>,
}

impl fmt::Display for ExtractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "encounters: {}", self.encounters)?;
        for n in &self.nodes {
            let how = match &n.fit {
                Some(fit) if fit.degenerate => "fitted (degenerate, sd floored)",
                Some(_) => "fitted",
                None => "default (too few samples)",
            };
            writeln!(
                f,
                "{:<26} n={:<5} mean={:>9.2} sd={:>8.2} [{}, {}] {how}",
                n.node, n.samples, n.used.mean, n.used.sd, n.used.lo, n.used.hi
            )?;
        }
        Ok(())
    }
}

fn fit_or_keep(node: &'static str, vals: &[f64], default: TruncNorm, nodes: &mut Vec<NodeReport>) -> TruncNorm {
    let fit = fit_truncnorm(vals, default.lo, default.hi).ok();
    if fit.is_none() {
        log::warn!("{node}: {} samples, keeping the default", vals.len());
    }
    let used = fit.as_ref().map_or(default, |f| TruncNorm::new(f.mean, f.sd, default.lo, default.hi));
    nodes.push(NodeReport { node, samples: vals.len(), fit, used });
    used
}

/// Priors fitted from a corpus. Windows and the discrete priors come from
/// `base`; a node with too few samples keeps its `base` distribution.
pub fn build_prior_config<M: MapSource + ?Sized>(
    encounters: &[Encounter],
    map: &M,
    th: &ExtractThresholds,
    base: &IntentionPriors,
) -> (IntentionPriors, ExtractionReport, ExtractionResult) {
    let vals = extract_values(encounters, map, th);
    let mut nodes = Vec::new();
    let mut p = base.clone();
    p.ample_time = fit_or_keep("ample_time", &vals.tcpa_vals, base.ample_time, &mut nodes);
    p.safe_distance = fit_or_keep("safe_distance", &vals.sd_vals, base.safe_distance, &mut nodes);
    p.safe_distance_front = fit_or_keep("safe_distance_front", &vals.isdf_vals, base.safe_distance_front, &mut nodes);
    p.safe_distance_midpoint =
        fit_or_keep("safe_distance_midpoint", &vals.sdm_vals, base.safe_distance_midpoint, &mut nodes);
    p.safe_distance_ground_side =
        fit_or_keep("safe_distance_ground_side", &vals.sdgs_vals, base.safe_distance_ground_side, &mut nodes);
    p.safe_distance_ground_front =
        fit_or_keep("safe_distance_ground_front", &vals.sdgf_vals, base.safe_distance_ground_front, &mut nodes);
    (p, ExtractionReport { encounters: encounters.len(), nodes }, vals)
}
