use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{wrap_pi, GeometryParams, ShipState};

/// COLREGS encounter situation as seen from the reference vessel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Situation {
    #[serde(rename = "HO")]
    HeadOn,
    #[serde(rename = "OT_en")]
    BeingOvertaken,
    #[serde(rename = "OT_ing")]
    Overtaking,
    #[serde(rename = "CR_PS")]
    CrossingPort,
    #[serde(rename = "CR_SS")]
    CrossingStarboard,
}

impl Situation {
    pub const ALL: [Situation; 5] = [
        Situation::HeadOn,
        Situation::BeingOvertaken,
        Situation::Overtaking,
        Situation::CrossingPort,
        Situation::CrossingStarboard,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Situation::HeadOn => "HO",
            Situation::BeingOvertaken => "OT_en",
            Situation::Overtaking => "OT_ing",
            Situation::CrossingPort => "CR_PS",
            Situation::CrossingStarboard => "CR_SS",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&s| s == self).expect("listed")
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Situation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Situation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|v| v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown situation `{s}`"))
    }
}

/// Relative bearing of `to` seen from `from`, in `(-π, π]`, positive to port.
fn relative_bearing(from: &ShipState, to: &ShipState) -> f64 {
    let b = (to.y - from.y).atan2(to.x - from.x);
    wrap_pi(b - from.cog)
}

/// Classifies the encounter by relative bearing and course.
///
/// Head-on when the courses are near reciprocal and the obstacle is near the
/// bow; overtaken when the obstacle sits in the stern sector and the
/// reference is slower; overtaking when the reference sits in the obstacle's
/// stern sector and is faster; otherwise crossing, by the side the obstacle
/// bears on. Stationary vessels are classified as crossing.
pub fn classify_colregs(reference: &ShipState, obs: &ShipState, params: &GeometryParams) -> Situation {
    let bow = params.head_on_half_angle_deg.to_radians();
    let stern = params.stern_half_angle_deg.to_radians();
    let bearing = relative_bearing(reference, obs);
    let crossing = if bearing > 0.0 { Situation::CrossingPort } else { Situation::CrossingStarboard };
    if reference.sog <= 0.0 || obs.sog <= 0.0 {
        return crossing;
    }
    let course_diff = wrap_pi(obs.cog - reference.cog).abs();
    if (course_diff - std::f64::consts::PI).abs() < bow && bearing.abs() < bow {
        return Situation::HeadOn;
    }
    let in_stern = |b: f64| std::f64::consts::PI - b.abs() < stern;
    if in_stern(bearing) && reference.sog < obs.sog {
        return Situation::BeingOvertaken;
    }
    if in_stern(relative_bearing(obs, reference)) && reference.sog > obs.sog {
        return Situation::Overtaking;
    }
    crossing
}
