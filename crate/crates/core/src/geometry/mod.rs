//! Kinematic and geospatial measurements.
//!
//! Planar frame: `x` east, `y` north, metres. Courses are mathematical
//! angles, counter-clockwise from east, so a starboard turn decreases the
//! course and a positive cross product (heading × offset) means port.

mod colregs;
mod cpa;
mod grounding;
mod maneuver;
mod projection;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use colregs::{classify_colregs, Situation};
pub use cpa::{
    cpa_linear, cross_front_distance, has_passed, midpoint_cpa, passing_side, segment_cpa, Cpa,
    SegmentCpa,
};
pub use grounding::{grounding_measurements, sector_ground_distance, GroundDistances, PolygonMap};
pub use maneuver::{
    course_speed_changes, state_at_or_before, waypoint_measurements, waypoint_trends, CourseChange, CourseSpeedChange,
    SpeedChange, Trend, WaypointMeasurements,
};
pub use projection::{project_local, unproject_local, GeoMap, GeoOrigin, EARTH_RADIUS_M};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("segment end time {next} is not after start time {curr}")]
    NonIncreasingTime { curr: f64, next: f64 },
    #[error("polygon ring has {0} distinct vertices, need at least 3")]
    DegenerateRing(usize),
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
}

/// Timestamped planar kinematic state of one vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShipState {
    /// Seconds.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Speed over ground, m/s.
    pub sog: f64,
    /// Course over ground, radians counter-clockwise from east.
    pub cog: f64,
}

impl ShipState {
    pub fn new(t: f64, x: f64, y: f64, sog: f64, cog: f64) -> Self {
        Self { t, x, y, sog, cog: normalize_angle(cog) }
    }

    /// Builds a state from a compass course (degrees clockwise from north).
    pub fn from_compass(t: f64, x: f64, y: f64, sog: f64, course_deg: f64) -> Self {
        Self::new(t, x, y, sog, compass_to_math(course_deg))
    }

    pub fn heading(&self) -> [f64; 2] {
        [self.cog.cos(), self.cog.sin()]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.sog * self.cog.cos(), self.sog * self.cog.sin()]
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Constant-velocity extrapolation to time `t`.
    pub fn propagate(&self, t: f64) -> ShipState {
        let dt = t - self.t;
        let [vx, vy] = self.velocity();
        ShipState { t, x: self.x + vx * dt, y: self.y + vy * dt, ..*self }
    }

    pub fn distance_to(&self, other: &ShipState) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.x, self.y, self.sog, self.cog].iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Starboard,
    Port,
}

/// Next waypoint of the reference vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
}

/// Tunables for the measurement geometry. Angles are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryParams {
    /// Half-width of the front sector, shared by the front-crossing gate
    /// and the front grounding zone.
    pub front_half_angle_deg: f64,
    /// Look-back window for waypoint bearing and distance trends, seconds.
    pub wpt_window_s: f64,
    /// Waypoint counts as ahead within this angle of the course.
    pub wp_ahead_half_angle_deg: f64,
    /// Course change threshold for the course-change measurements.
    pub cic_threshold_deg: f64,
    /// Window for "currently changing course", seconds.
    pub ccc_window_s: f64,
    /// Speed change threshold, m/s.
    pub cis_threshold_mps: f64,
    pub wprb_deadband_deg: f64,
    pub wprd_deadband_m: f64,
    /// Head-on: reciprocal within this angle and target within this angle of the bow.
    pub head_on_half_angle_deg: f64,
    /// Overtaking: bearing within this angle of the stern.
    pub stern_half_angle_deg: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            front_half_angle_deg: 22.5,
            wpt_window_s: 30.0,
            wp_ahead_half_angle_deg: 15.0,
            cic_threshold_deg: 5.0,
            ccc_window_s: 60.0,
            cis_threshold_mps: 0.5,
            wprb_deadband_deg: 1.0,
            wprd_deadband_m: 10.0,
            head_on_half_angle_deg: 22.5,
            stern_half_angle_deg: 67.5,
        }
    }
}

impl GeometryParams {
    pub fn front_half_angle(&self) -> f64 {
        self.front_half_angle_deg.to_radians()
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("front_half_angle_deg", self.front_half_angle_deg),
            ("wpt_window_s", self.wpt_window_s),
            ("wp_ahead_half_angle_deg", self.wp_ahead_half_angle_deg),
            ("cic_threshold_deg", self.cic_threshold_deg),
            ("ccc_window_s", self.ccc_window_s),
            ("cis_threshold_mps", self.cis_threshold_mps),
            ("wprb_deadband_deg", self.wprb_deadband_deg),
            ("wprd_deadband_m", self.wprd_deadband_m),
            ("head_on_half_angle_deg", self.head_on_half_angle_deg),
            ("stern_half_angle_deg", self.stern_half_angle_deg),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.front_half_angle_deg >= 90.0 {
            return Err("front_half_angle_deg must be below 90".into());
        }
        Ok(())
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Smallest signed difference, wrapped into `(-π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Compass degrees (clockwise from north) to mathematical radians.
pub fn compass_to_math(course_deg: f64) -> f64 {
    normalize_angle((90.0 - course_deg).to_radians())
}

/// Mathematical radians to compass degrees in `[0, 360)`.
pub fn math_to_compass(cog: f64) -> f64 {
    (90.0 - cog.to_degrees()).rem_euclid(360.0)
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}
