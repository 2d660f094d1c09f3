//! The online inference loop: per-step evidence, belief update, slice
//! policy and candidate scoring.

mod measure;
mod replay;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bn::{BnError, Distribution, VarId};
use crate::geometry::{wrap_pi, CourseChange, GeometryParams, PolygonMap, ShipState, Situation, Waypoint};
use crate::intention::{
    build_intention_dbn, Discretization, IntentionDbn, IntentionError, IntentionPriors, MeasurementVector,
};
use crate::trajgen::CandidateTrajectory;

pub use measure::{classify_all, measure, measure_step, MeasureContext};
pub use replay::{interpolate_track, replay, score_at, ReplayOptions};

/// Raw scores below this are treated as zero.
pub const SCORE_FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Intention(#[from] IntentionError),
    #[error("need a reference vessel and at least one obstacle, got {0} states")]
    TooFewVessels(usize),
    #[error("expected {expected} vessel states, got {got}")]
    VesselCount { expected: usize, got: usize },
    #[error("vessel states must be finite")]
    NonFinite,
    #[error("step at t = {t} is not after the previous step at t = {last}")]
    StaleStep { t: f64, last: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no candidate trajectories to score")]
    NoCandidates,
    #[error("encounter tracks do not overlap in time")]
    NoOverlap,
}

impl From<BnError> for RuntimeError {
    fn from(e: BnError) -> Self {
        RuntimeError::Intention(IntentionError::Bn(e))
    }
}

impl RuntimeError {
    /// Evidence with zero probability, as opposed to bad input.
    pub fn is_contradiction(&self) -> bool {
        matches!(self, RuntimeError::Intention(IntentionError::Bn(BnError::Contradiction(_))))
    }
}

/// When to open a new slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SlicePolicy {
    /// A slice older than this is always followed by a new one, seconds.
    pub max_age_s: f64,
    /// Manoeuvres only open a slice once the current one is this old.
    pub min_age_s: f64,
    pub course_change_deg: f64,
    pub speed_change_mps: f64,
}

impl Default for SlicePolicy {
    fn default() -> Self {
        Self { max_age_s: 60.0, min_age_s: 10.0, course_change_deg: 5.0, speed_change_mps: 0.5 }
    }
}

impl SlicePolicy {
    /// Never opens a second slice.
    pub fn single_slice() -> Self {
        Self { max_age_s: f64::INFINITY, min_age_s: f64::INFINITY, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.max_age_s > 0.0) || !(self.min_age_s >= 0.0) || self.min_age_s > self.max_age_s {
            return Err(format!(
                "slice ages must satisfy 0 <= min ({}) <= max ({}), max > 0",
                self.min_age_s, self.max_age_s
            ));
        }
        if !(self.course_change_deg > 0.0) || !(self.speed_change_mps > 0.0) {
            return Err("slice change thresholds must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub priors: IntentionPriors,
    pub discretization: Discretization,
    pub geometry: GeometryParams,
    pub slices: SlicePolicy,
    /// How far into a candidate trajectory it is measured, seconds.
    pub lookahead_s: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            priors: IntentionPriors::default(),
            discretization: Discretization::default(),
            geometry: GeometryParams::default(),
            slices: SlicePolicy::default(),
            lookahead_s: 60.0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.priors.validate().map_err(|e| e.to_string())?;
        self.discretization.validate().map_err(|e| e.to_string())?;
        self.geometry.validate()?;
        self.slices.validate()?;
        if !(self.lookahead_s > 0.0 && self.lookahead_s.is_finite()) {
            return Err(format!("lookahead_s must be positive, got {}", self.lookahead_s));
        }
        Ok(())
    }
}

/// Marginals of every intention node at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentionPosterior {
    pub t: f64,
    pub distributions: Vec<Distribution>,
}

impl IntentionPosterior {
    pub fn get(&self, name: &str) -> Option<&Distribution> {
        self.distributions.iter().find(|d| d.name == name)
    }

    pub fn of(&self, var: VarId) -> Option<&Distribution> {
        self.distributions.iter().find(|d| d.var == var)
    }
}

/// `P(node = true)` for the monitored nodes of the active slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct NodeProbabilities {
    pub sdg_f: f64,
    pub sdg_s: f64,
    pub c_nav_m: Vec<f64>,
    pub c_colav_m: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct CandidateScore {
    pub id: String,
    /// `P(C = true)` in the scoring slice.
    pub raw: f64,
    /// Share of the summed raw scores.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    pub scores: Vec<CandidateScore>,
    /// Every raw score was zero; confidences are uniform.
    pub all_incompatible: bool,
}

/// Normalizes raw scores, clamping tiny values to zero first.
pub fn normalize_scores(ids: Vec<String>, raw: Vec<f64>) -> CandidateScores {
    let raw: Vec<f64> = raw.into_iter().map(|r| if r < SCORE_FLOOR { 0.0 } else { r }).collect();
    let total: f64 = raw.iter().sum();
    let n = raw.len() as f64;
    let all_incompatible = total <= 0.0;
    let scores = ids
        .into_iter()
        .zip(raw)
        .map(|(id, raw)| {
            let confidence = if all_incompatible { 1.0 / n } else { raw / total };
            CandidateScore { id, raw, confidence }
        })
        .collect();
    CandidateScores { scores, all_incompatible }
}

/// One named marginal in an exported record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct NamedDistribution {
    pub name: String,
    pub probabilities: Vec<f64>,
}

/// Everything reported for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct StepRecord {
    pub t: f64,
    pub slices: usize,
    pub intentions: Vec<NamedDistribution>,
    pub nodes: NodeProbabilities,
    pub candidates: Vec<CandidateScore>,
}

pub struct Session {
    config: SessionConfig,
    dbn: IntentionDbn,
    /// Single-slice network with flat intention priors, cloned per candidate.
    scorer: IntentionDbn,
    slice_times: Vec<f64>,
    /// Vessel states (reference first) when each slice was opened.
    slice_states: Vec<Vec<ShipState>>,
    measurements: Vec<Option<MeasurementVector>>,
    /// Reference then obstacle states at the start of the situation.
    situation_start: Vec<ShipState>,
    situations: Vec<Situation>,
    history: Vec<ShipState>,
    latest: Vec<ShipState>,
    last_step: Option<f64>,
    posterior: IntentionPosterior,
    nodes: Option<NodeProbabilities>,
}

fn check_states(states: &[ShipState]) -> Result<(), RuntimeError> {
    if states.len() < 2 {
        return Err(RuntimeError::TooFewVessels(states.len()));
    }
    if !states.iter().all(ShipState::is_finite) {
        return Err(RuntimeError::NonFinite);
    }
    Ok(())
}

/// Starts a one-slice session at `t0`. `states` lists the reference vessel
/// first, then the obstacles.
pub fn init_session(config: SessionConfig, t0: f64, states: &[ShipState]) -> Result<Session, RuntimeError> {
    check_states(states)?;
    config.validate().map_err(RuntimeError::InvalidConfig)?;
    let n = states.len() - 1;
    let situations = classify_all(&states[0], &states[1..], &config.geometry);
    let mut dbn = build_intention_dbn(n, &config.priors, &config.discretization, 1)?;
    dbn.anchor_situations(&situations, config.priors.situation_concentration)?;
    dbn.set_latches(false, false)?;
    let mut scorer = build_intention_dbn(n, &config.priors, &config.discretization, 1)?;
    scorer.flatten_intention_priors()?;
    let distributions = dbn.network().posteriors_conditioned(&dbn.intentions().all(), &dbn.cutset())?;
    Ok(Session {
        config,
        dbn,
        scorer,
        slice_times: vec![t0],
        slice_states: vec![states.to_vec()],
        measurements: vec![None],
        situation_start: states.to_vec(),
        situations,
        history: vec![states[0]],
        latest: states.to_vec(),
        last_step: None,
        posterior: IntentionPosterior { t: t0, distributions },
        nodes: None,
    })
}

impl Session {
    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn dbn(&self) -> &IntentionDbn {
        &self.dbn
    }

    pub fn slice_count(&self) -> usize {
        self.dbn.slice_count()
    }

    pub fn slice_times(&self) -> &[f64] {
        &self.slice_times
    }

    pub fn measurements(&self) -> &[Option<MeasurementVector>] {
        &self.measurements
    }

    pub fn situation_start(&self) -> &[ShipState] {
        &self.situation_start
    }

    pub fn situations(&self) -> &[Situation] {
        &self.situations
    }

    pub fn posterior(&self) -> &IntentionPosterior {
        &self.posterior
    }

    /// Monitored node probabilities from the last step, if any.
    pub fn nodes(&self) -> Option<&NodeProbabilities> {
        self.nodes.as_ref()
    }

    pub fn latest_states(&self) -> &[ShipState] {
        &self.latest
    }

    /// Action latches after the active slice: whether the reference has
    /// turned to starboard or to port since the situation started.
    pub fn latches(&self) -> (bool, bool) {
        let seen = |c| self.measurements.iter().flatten().any(|m| m.cic == c);
        (seen(CourseChange::Starboard), seen(CourseChange::Port))
    }

    /// Whether a new slice should be opened for `states`.
    pub fn should_add_slice(&self, states: &[ShipState]) -> bool {
        let policy = &self.config.slices;
        let Some(&opened) = self.slice_times.last() else { return true };
        let age = states[0].t - opened;
        if age > policy.max_age_s {
            return true;
        }
        if age < policy.min_age_s {
            return false;
        }
        let base = self.slice_states.last().expect("one slice per time");
        let theta = policy.course_change_deg.to_radians();
        states.iter().zip(base).any(|(now, then)| {
            wrap_pi(now.cog - then.cog).abs() > theta || (now.sog - then.sog).abs() > policy.speed_change_mps
        })
    }

    fn context<'a>(&'a self, map: &'a PolygonMap, waypoint: Option<Waypoint>) -> MeasureContext<'a> {
        MeasureContext {
            situation_start: &self.situation_start[0],
            situations: &self.situations,
            map,
            waypoint,
            geometry: &self.config.geometry,
            disc: &self.config.discretization,
        }
    }

    /// Folds in one observation of every vessel and updates the intention
    /// posteriors.
    pub fn step_update(
        &mut self,
        states: &[ShipState],
        map: &PolygonMap,
        waypoint: Option<Waypoint>,
    ) -> Result<&IntentionPosterior, RuntimeError> {
        check_states(states)?;
        if states.len() != self.latest.len() {
            return Err(RuntimeError::VesselCount { expected: self.latest.len(), got: states.len() });
        }
        let t = states[0].t;
        let last = self.last_step.unwrap_or(self.slice_times[0]);
        if self.last_step.is_some() && t <= last || t < last {
            return Err(RuntimeError::StaleStep { t, last });
        }
        let active_measured = self.measurements.last().is_some_and(Option::is_some);
        if active_measured && self.should_add_slice(states) {
            self.dbn.append_slice()?;
            self.slice_times.push(t);
            self.slice_states.push(states.to_vec());
            self.measurements.push(None);
        }
        if self.history.last().is_some_and(|h| h.t < t) {
            self.history.push(states[0]);
        }
        let mv = measure_step(&states[0], &self.history, &states[1..], &self.context(map, waypoint))?;
        let active = self.dbn.slice_count() - 1;
        self.dbn.set_measurements(active, &mv)?;
        self.dbn.set_compatible(active)?;
        *self.measurements.last_mut().expect("one slice per time") = Some(mv);
        self.latest = states.to_vec();
        self.last_step = Some(t);

        let intentions = self.dbn.intentions().all();
        let slice = self.dbn.slice(active)?.clone();
        let mut queries = intentions.clone();
        queries.extend([slice.sdg_f, slice.sdg_s]);
        queries.extend(slice.ships.iter().map(|s| s.c_nav_m));
        queries.extend(slice.ships.iter().map(|s| s.c_colav_m));
        let mut found = self.dbn.network().posteriors_conditioned(&queries, &self.dbn.cutset())?;
        let rest = found.split_off(intentions.len());
        let n = slice.ships.len();
        let p = |d: &Distribution| d.prob(1);
        self.nodes = Some(NodeProbabilities {
            sdg_f: p(&rest[0]),
            sdg_s: p(&rest[1]),
            c_nav_m: rest[2..2 + n].iter().map(p).collect(),
            c_colav_m: rest[2 + n..].iter().map(p).collect(),
            c: 1.0,
        });
        self.posterior = IntentionPosterior { t, distributions: found };
        Ok(&self.posterior)
    }

    /// Measurement vector of a candidate: trends from its start to the
    /// lookahead point, everything else at the lookahead point against the
    /// obstacles extrapolated to that time. The course-changing flag is
    /// always false.
    pub fn measure_candidate(
        &self,
        traj: &CandidateTrajectory,
        map: &PolygonMap,
        waypoint: Option<Waypoint>,
    ) -> Result<MeasurementVector, RuntimeError> {
        let start = &traj.states[0];
        let at = traj.state_at(start.t + self.config.lookahead_s);
        let obstacles: Vec<ShipState> = self.latest[1..].iter().map(|o| o.propagate(at.t)).collect();
        let mut mv = measure(at, traj.prefix(at.t), Some(start), &obstacles, &self.context(map, waypoint))?;
        // A candidate is judged on the manoeuvre it commits to, not on the
        // turn that gets it there.
        mv.ccc = false;
        Ok(mv)
    }

    /// `P(C = true)` for one candidate in a detached scoring slice whose
    /// intention nodes carry the current posteriors as virtual evidence.
    pub fn raw_score(&self, mv: &MeasurementVector) -> Result<f64, RuntimeError> {
        let mut net = self.scorer.clone();
        let (sa, pa) = self.latches();
        net.set_latches(sa, pa)?;
        net.set_measurements(0, mv)?;
        net.set_intention_likelihoods(&self.posterior.distributions)?;
        let c = net.slice(0)?.compatible;
        let d = net.network().posteriors_conditioned(&[c], &net.cutset())?;
        Ok(d[0].prob(1))
    }

    /// Monitored node probabilities in the scoring slice for one candidate
    /// measurement; `c` equals [`Session::raw_score`].
    pub fn candidate_nodes(&self, mv: &MeasurementVector) -> Result<NodeProbabilities, RuntimeError> {
        let mut net = self.scorer.clone();
        let (sa, pa) = self.latches();
        net.set_latches(sa, pa)?;
        net.set_measurements(0, mv)?;
        net.set_intention_likelihoods(&self.posterior.distributions)?;
        let slice = net.slice(0)?;
        let mut q = vec![slice.sdg_f, slice.sdg_s, slice.compatible];
        q.extend(slice.ships.iter().map(|s| s.c_nav_m));
        q.extend(slice.ships.iter().map(|s| s.c_colav_m));
        let d = net.network().posteriors_conditioned(&q, &net.cutset())?;
        let n = slice.ships.len();
        let p = |d: &Distribution| d.prob(1);
        Ok(NodeProbabilities {
            sdg_f: p(&d[0]),
            sdg_s: p(&d[1]),
            c_nav_m: d[3..3 + n].iter().map(p).collect(),
            c_colav_m: d[3 + n..].iter().map(p).collect(),
            c: p(&d[2]),
        })
    }

    /// Scores every candidate; results follow the input order.
    pub fn score_candidates(
        &self,
        candidates: &[CandidateTrajectory],
        map: &PolygonMap,
        waypoint: Option<Waypoint>,
    ) -> Result<CandidateScores, RuntimeError> {
        if candidates.is_empty() {
            return Err(RuntimeError::NoCandidates);
        }
        let raw: Vec<f64> = candidates
            .par_iter()
            .map(|c| self.measure_candidate(c, map, waypoint).and_then(|mv| self.raw_score(&mv)))
            .collect::<Result<_, _>>()?;
        Ok(normalize_scores(candidates.iter().map(|c| c.id.clone()).collect(), raw))
    }

    /// Record of the last step with the given candidate scores.
    pub fn record(&self, candidates: Vec<CandidateScore>) -> StepRecord {
        let n = self.latest.len() - 1;
        StepRecord {
            t: self.posterior.t,
            slices: self.slice_count(),
            intentions: self
                .posterior
                .distributions
                .iter()
                .map(|d| NamedDistribution { name: d.name.clone(), probabilities: d.probabilities.clone() })
                .collect(),
            nodes: self.nodes.clone().unwrap_or(NodeProbabilities {
                sdg_f: f64::NAN,
                sdg_s: f64::NAN,
                c_nav_m: vec![f64::NAN; n],
                c_colav_m: vec![f64::NAN; n],
                c: f64::NAN,
            }),
            candidates,
        }
    }

    /// Hash of everything a step or a scoring call could touch.
    pub fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        format!(
            "{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}",
            self.slice_times,
            self.slice_states,
            self.measurements,
            self.history,
            self.latest,
            self.last_step,
            self.posterior,
            self.nodes,
            self.dbn.network().evidence(),
            self.dbn.network().len(),
        )
        .hash(&mut h);
        format!("{:?}|{}", self.scorer.network().evidence(), self.scorer.network().len()).hash(&mut h);
        h.finish()
    }
}
