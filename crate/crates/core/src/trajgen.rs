//! Candidate trajectories from line-of-sight guidance with a course offset.
//!
//! The vessel turns toward `cog + offset` at a limited rate until it has
//! moved `deviation_m · sin(offset)` off the nominal line, then pursues a
//! line parallel to the nominal one at that offset. Speed never changes.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_pi, ShipState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct TrajGenParams {
    /// Course offsets in degrees, negative to starboard.
    pub offsets_deg: Vec<f64>,
    pub turn_rate_deg_s: f64,
    pub horizon_s: f64,
    pub dt_s: f64,
    /// Lateral offset reached by a 90 degree course offset, metres.
    pub deviation_m: f64,
    /// Lookahead distance of the pursuit phase, metres.
    pub lookahead_m: f64,
}

impl Default for TrajGenParams {
    fn default() -> Self {
        Self {
            offsets_deg: vec![-90.0, -45.0, -20.0, 0.0, 20.0, 45.0],
            turn_rate_deg_s: 2.0,
            horizon_s: 600.0,
            dt_s: 5.0,
            deviation_m: 500.0,
            lookahead_m: 150.0,
        }
    }
}

impl TrajGenParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.offsets_deg.is_empty() {
            return Err("offsets_deg must not be empty".into());
        }
        if self.offsets_deg.iter().any(|o| !o.is_finite() || o.abs() > 180.0) {
            return Err("offsets_deg must lie in [-180, 180]".into());
        }
        for (name, v) in [
            ("turn_rate_deg_s", self.turn_rate_deg_s),
            ("horizon_s", self.horizon_s),
            ("dt_s", self.dt_s),
            ("deviation_m", self.deviation_m),
            ("lookahead_m", self.lookahead_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    pub fn offsets(&self) -> Vec<f64> {
        self.offsets_deg.iter().map(|d| d.to_radians()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrajectory {
    pub id: String,
    /// Samples at a fixed step, starting with the start state.
    pub states: Vec<ShipState>,
    /// Course offset in radians.
    pub offset: f64,
}

impl CandidateTrajectory {
    /// Sample at `t`, or the last sample when the trajectory ends earlier.
    pub fn state_at(&self, t: f64) -> &ShipState {
        let n = self.states.partition_point(|s| s.t <= t + 1e-9);
        &self.states[n.saturating_sub(1)]
    }

    /// Samples up to and including `t`.
    pub fn prefix(&self, t: f64) -> &[ShipState] {
        let n = self.states.partition_point(|s| s.t <= t + 1e-9);
        &self.states[..n.max(1)]
    }

    pub fn duration(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t) - self.states[0].t
    }
}

/// Label for an offset: `S20` for 20 degrees to starboard, `P45` to port.
pub fn offset_label(offset: f64) -> String {
    let deg = offset.to_degrees();
    let mag = (deg.abs() * 10.0).round() / 10.0;
    if mag == 0.0 {
        "N0".to_string()
    } else if deg < 0.0 {
        format!("S{mag}")
    } else {
        format!("P{mag}")
    }
}

/// One trajectory with the given course offset.
pub fn los_trajectory(start: &ShipState, offset: f64, params: &TrajGenParams) -> CandidateTrajectory {
    let rate = params.turn_rate_deg_s.to_radians() * params.dt_s;
    let steps = (params.horizon_s / params.dt_s).ceil() as usize;
    let target = params.deviation_m * offset.sin();
    let step_len = start.sog * params.dt_s;
    let (c, s) = (start.cog.cos(), start.cog.sin());
    // Along-track and cross-track (port positive) offsets and relative course.
    let (mut along, mut cross, mut psi) = (0.0f64, 0.0f64, 0.0f64);
    let mut pursuing = offset == 0.0;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(*start);
    for k in 1..=steps {
        if !pursuing && cross.abs() >= target.abs() {
            pursuing = true;
        }
        let desired = if pursuing { -((cross - target) / params.lookahead_m).atan() } else { offset };
        psi += (desired - psi).clamp(-rate, rate);
        along += step_len * psi.cos();
        cross += step_len * psi.sin();
        states.push(ShipState::new(
            start.t + k as f64 * params.dt_s,
            start.x + along * c - cross * s,
            start.y + along * s + cross * c,
            start.sog,
            start.cog + psi,
        ));
    }
    CandidateTrajectory { id: offset_label(offset), states, offset: wrap_pi(offset) }
}

/// One trajectory per offset, in offset order.
pub fn los_candidates(start: &ShipState, params: &TrajGenParams) -> Vec<CandidateTrajectory> {
    params.offsets().into_iter().map(|o| los_trajectory(start, o, params)).collect()
}
