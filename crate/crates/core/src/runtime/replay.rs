use serde::{Deserialize, Serialize};

use super::{init_session, RuntimeError, SessionConfig, StepRecord};
use crate::geometry::{wrap_pi, PolygonMap, ShipState, Waypoint};
use crate::trajgen::{los_candidates, TrajGenParams};

/// State on a time-sorted track at `t`, interpolating linearly between
/// samples (courses along the shorter arc). `None` outside the track.
pub fn interpolate_track(track: &[ShipState], t: f64) -> Option<ShipState> {
    let first = track.first()?;
    let last = track.last()?;
    if t < first.t || t > last.t {
        return None;
    }
    let k = track.partition_point(|s| s.t <= t);
    if k == track.len() {
        return Some(*last);
    }
    let (a, b) = (&track[k - 1], &track[k]);
    if a.t == t {
        return Some(*a);
    }
    let w = (t - a.t) / (b.t - a.t);
    Some(ShipState::new(
        t,
        a.x + w * (b.x - a.x),
        a.y + w * (b.y - a.y),
        a.sog + w * (b.sog - a.sog),
        a.cog + w * wrap_pi(b.cog - a.cog),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayOptions {
    /// Time between steps, seconds.
    pub step_s: f64,
    /// Score LOS candidates at every step.
    pub score: bool,
    pub candidates: TrajGenParams,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self { step_s: 5.0, score: true, candidates: TrajGenParams::default() }
    }
}

/// Checks the inputs and returns the common time span of `tracks`.
fn common_span(tracks: &[Vec<ShipState>], options: &ReplayOptions) -> Result<(f64, f64), RuntimeError> {
    if tracks.len() < 2 {
        return Err(RuntimeError::TooFewVessels(tracks.len()));
    }
    if !(options.step_s > 0.0) {
        return Err(RuntimeError::InvalidConfig(format!("step_s must be positive, got {}", options.step_s)));
    }
    if options.score {
        options.candidates.validate().map_err(RuntimeError::InvalidConfig)?;
    }
    let bounds = |f: fn(&Vec<ShipState>) -> Option<f64>| tracks.iter().map(f).collect::<Option<Vec<f64>>>();
    let starts = bounds(|t| t.first().map(|s| s.t)).ok_or(RuntimeError::NoOverlap)?;
    let ends = bounds(|t| t.last().map(|s| s.t)).ok_or(RuntimeError::NoOverlap)?;
    let t0 = starts.iter().copied().fold(f64::MIN, f64::max);
    let t1 = ends.iter().copied().fold(f64::MAX, f64::min);
    if t0 > t1 {
        return Err(RuntimeError::NoOverlap);
    }
    Ok((t0, t1))
}

fn states_at(tracks: &[Vec<ShipState>], t: f64) -> Vec<ShipState> {
    tracks.iter().map(|tr| interpolate_track(tr, t).expect("inside the common span")).collect()
}

/// Runs the inference loop over the common time span of `tracks`
/// (reference first) and returns one record per step.
pub fn replay(
    config: &SessionConfig,
    tracks: &[Vec<ShipState>],
    map: &PolygonMap,
    waypoint: Option<Waypoint>,
    options: &ReplayOptions,
) -> Result<Vec<StepRecord>, RuntimeError> {
    let (t0, t1) = common_span(tracks, options)?;
    let mut session = init_session(config.clone(), t0, &states_at(tracks, t0))?;
    let mut records = Vec::new();
    let steps = ((t1 - t0) / options.step_s + 1e-9).floor() as usize;
    for k in 0..=steps {
        let t = t0 + k as f64 * options.step_s;
        let states = states_at(tracks, t);
        session.step_update(&states, map, waypoint)?;
        let scores = if options.score {
            let candidates = los_candidates(&states[0], &options.candidates);
            session.score_candidates(&candidates, map, waypoint)?.scores
        } else {
            Vec::new()
        };
        log::debug!("t = {t:.1}: {} slices", session.slice_count());
        records.push(session.record(scores));
    }
    Ok(records)
}

/// Steps through the tracks up to `at` without scoring, then scores the
/// LOS candidates from the reference state at `at`.
pub fn score_at(
    config: &SessionConfig,
    tracks: &[Vec<ShipState>],
    map: &PolygonMap,
    waypoint: Option<Waypoint>,
    options: &ReplayOptions,
    at: f64,
) -> Result<StepRecord, RuntimeError> {
    let options = ReplayOptions { score: true, ..options.clone() };
    let (t0, t1) = common_span(tracks, &options)?;
    if !(t0..=t1).contains(&at) {
        return Err(RuntimeError::InvalidConfig(format!("t = {at} is outside the tracks' common span [{t0}, {t1}]")));
    }
    let mut session = init_session(config.clone(), t0, &states_at(tracks, t0))?;
    let mut t = t0;
    while t < at {
        session.step_update(&states_at(tracks, t), map, waypoint)?;
        t += options.step_s;
    }
    let states = states_at(tracks, at);
    session.step_update(&states, map, waypoint)?;
    let candidates = los_candidates(&states[0], &options.candidates);
    let scores = session.score_candidates(&candidates, map, waypoint)?.scores;
    Ok(session.record(scores))
}
