//! Own-ship manoeuvre measurements: waypoint trends and course/speed changes.

use serde::{Deserialize, Serialize};

use super::{wrap_pi, GeometryParams, ShipState, Waypoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trend {
    Decreasing,
    Increasing,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointMeasurements {
    /// Trend of the absolute relative bearing to the waypoint.
    pub wprb: Trend,
    /// Trend of the distance to the waypoint.
    pub wprd: Trend,
    /// Waypoint lies ahead within the configured half angle.
    pub wpah: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CourseChange {
    Starboard,
    Port,
    Straight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpeedChange {
    Higher,
    Lower,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CourseSpeedChange {
    pub cic: CourseChange,
    pub cis: SpeedChange,
    /// Course changed by more than the threshold over the trailing window.
    pub ccc: bool,
}

/// Latest sample at or before `t`. `history` must be sorted by time.
pub fn state_at_or_before(history: &[ShipState], t: f64) -> Option<&ShipState> {
    let n = history.partition_point(|s| s.t <= t);
    n.checked_sub(1).map(|i| &history[i])
}

fn waypoint_bearing_off(s: &ShipState, wp: Waypoint) -> f64 {
    let b = (wp.y - s.y).atan2(wp.x - s.x);
    wrap_pi(b - s.cog).abs()
}

fn waypoint_distance(s: &ShipState, wp: Waypoint) -> f64 {
    (wp.x - s.x).hypot(wp.y - s.y)
}

fn trend(before: f64, now: f64, deadband: f64) -> Trend {
    if now < before - deadband {
        Trend::Decreasing
    } else if now > before + deadband {
        Trend::Increasing
    } else {
        Trend::Neither
    }
}

/// Waypoint trends between two states of the same vessel.
pub fn waypoint_trends(
    before: Option<&ShipState>,
    now: &ShipState,
    wp: Waypoint,
    params: &GeometryParams,
) -> WaypointMeasurements {
    let wpah = waypoint_bearing_off(now, wp) <= params.wp_ahead_half_angle_deg.to_radians();
    let Some(before) = before else {
        return WaypointMeasurements { wprb: Trend::Neither, wprd: Trend::Neither, wpah };
    };
    WaypointMeasurements {
        wprb: trend(
            waypoint_bearing_off(before, wp),
            waypoint_bearing_off(now, wp),
            params.wprb_deadband_deg.to_radians(),
        ),
        wprd: trend(waypoint_distance(before, wp), waypoint_distance(now, wp), params.wprd_deadband_m),
        wpah,
    }
}

/// Waypoint trends comparing `now` with the sampled state one window earlier.
pub fn waypoint_measurements(
    now: &ShipState,
    history: &[ShipState],
    wp: Waypoint,
    params: &GeometryParams,
) -> WaypointMeasurements {
    let before = state_at_or_before(history, now.t - params.wpt_window_s);
    waypoint_trends(before, now, wp, params)
}

/// Course and speed change relative to the start of the situation, and
/// whether the course is currently changing over the trailing window of
/// `history` (which should end at or before `now`).
pub fn course_speed_changes(
    now: &ShipState,
    situation_start: &ShipState,
    history: &[ShipState],
    params: &GeometryParams,
) -> CourseSpeedChange {
    let thr = params.cic_threshold_deg.to_radians();
    let dc = wrap_pi(now.cog - situation_start.cog);
    let cic = if dc < -thr {
        CourseChange::Starboard
    } else if dc > thr {
        CourseChange::Port
    } else {
        CourseChange::Straight
    };
    let ds = now.sog - situation_start.sog;
    let cis = if ds > params.cis_threshold_mps {
        SpeedChange::Higher
    } else if ds < -params.cis_threshold_mps {
        SpeedChange::Lower
    } else {
        SpeedChange::None
    };
    let past = state_at_or_before(history, now.t - params.ccc_window_s).or(history.first());
    let ccc = past.is_some_and(|p| wrap_pi(now.cog - p.cog).abs() > thr);
    CourseSpeedChange { cic, cis, ccc }
}
