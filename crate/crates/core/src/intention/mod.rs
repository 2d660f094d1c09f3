//! The intention network: priors, discretization, model-node predicates and
//! the multi-slice network built from them.
//!
//! For `n` obstacle ships and `T` slices the network holds
//! `10 + 2n` intention nodes, two latch roots (`SA_init`, `PA_init`) and
//! `T · (23n + 16)` slice nodes (`8n + 9` measurement nodes and `15n + 7`
//! model nodes per slice), so `12 + 2n + T · (23n + 16)` nodes in total.

mod discretize;
mod model;
mod network;

use serde::{Deserialize, Serialize};

use crate::bn::BnError;
use crate::geometry::{CourseChange, Side, Situation, SpeedChange, Trend};

pub use discretize::{discretize_truncnorm, real_to_bin};
pub use model::{model_node_truth, ModelNodeKind, ModelNodeSpec};
pub use network::{
    build_intention_dbn, intention_cs_prior, IntentionDbn, IntentionIds, ShipSliceIds, SliceIds,
};

#[derive(Debug, thiserror::Error)]
pub enum IntentionError {
    #[error("invalid prior for {node}: {reason}")]
    InvalidPrior { node: &'static str, reason: String },
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),
    #[error("truncation window [{lo}, {hi}] holds no probability mass")]
    DegenerateWindow { lo: f64, hi: f64 },
    #[error("measurement {0} is negative or not a number")]
    InvalidMeasurement(f64),
    #[error("{node} expects {expected} parent states, got {got}")]
    MissingParent { node: &'static str, expected: usize, got: usize },
    #[error("measurement vector has {got} ships, network has {expected}")]
    ShipCount { expected: usize, got: usize },
    #[error("slice {0} does not exist")]
    NoSuchSlice(usize),
    #[error(transparent)]
    Bn(#[from] BnError),
}

/// Normal distribution truncated to `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TruncNorm {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl TruncNorm {
    pub const fn new(mean: f64, sd: f64, lo: f64, hi: f64) -> Self {
        Self { mean, sd, lo, hi }
    }

    fn validate(&self, node: &'static str) -> Result<(), IntentionError> {
        let bad = |reason: String| Err(IntentionError::InvalidPrior { node, reason });
        if ![self.mean, self.sd, self.lo, self.hi].iter().all(|v| v.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if self.sd <= 0.0 {
            return bad(format!("standard deviation {} must be positive", self.sd));
        }
        if self.lo >= self.hi {
            return bad(format!("window [{}, {}] is empty", self.lo, self.hi));
        }
        Ok(())
    }
}

/// Priors of the intention nodes. Binary nodes are given as `P(true)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct IntentionPriors {
    /// Ample time, seconds.
    pub ample_time: TruncNorm,
    /// Safe distance at CPA, metres.
    pub safe_distance: TruncNorm,
    /// Safe distance crossing in front, metres.
    pub safe_distance_front: TruncNorm,
    /// Safe distance to the midpoint, metres.
    pub safe_distance_midpoint: TruncNorm,
    /// Safe distance to ground on the sides, metres.
    pub safe_distance_ground_side: TruncNorm,
    /// Safe distance to ground ahead, metres.
    pub safe_distance_ground_front: TruncNorm,
    pub colregs_compliant: f64,
    pub good_seamanship: f64,
    pub towards_ground: f64,
    pub unmodeled: f64,
    /// Priority towards each obstacle: higher, similar, lower.
    pub priority: [f64; 3],
    /// Mass put on the measured situation; the rest is shared evenly.
    pub situation_concentration: f64,
}

impl Default for IntentionPriors {
    fn default() -> Self {
        Self {
            ample_time: TruncNorm::new(2527.0, 1120.0, 0.0, 5000.0),
            safe_distance: TruncNorm::new(808.0, 430.0, 0.0, 1500.0),
            safe_distance_front: TruncNorm::new(1411.0, 472.0, 0.0, 2000.0),
            safe_distance_midpoint: TruncNorm::new(249.0, 148.0, 0.0, 600.0),
            safe_distance_ground_side: TruncNorm::new(436.0, 124.0, 0.0, 700.0),
            safe_distance_ground_front: TruncNorm::new(535.0, 120.0, 0.0, 800.0),
            colregs_compliant: 0.98,
            good_seamanship: 0.99,
            towards_ground: 0.01,
            unmodeled: 0.01,
            priority: [0.05, 0.90, 0.05],
            situation_concentration: 0.92,
        }
    }
}

impl IntentionPriors {
    pub fn validate(&self) -> Result<(), IntentionError> {
        self.ample_time.validate("I_AT")?;
        self.safe_distance.validate("I_SD")?;
        self.safe_distance_front.validate("I_SDF")?;
        self.safe_distance_midpoint.validate("I_SDM")?;
        self.safe_distance_ground_side.validate("I_SDGS")?;
        self.safe_distance_ground_front.validate("I_SDGF")?;
        for (node, p) in [
            ("I_CC", self.colregs_compliant),
            ("I_GS", self.good_seamanship),
            ("I_G", self.towards_ground),
            ("I_U", self.unmodeled),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(IntentionError::InvalidPrior { node, reason: format!("P(true) = {p}") });
            }
        }
        let sum: f64 = self.priority.iter().sum();
        if self.priority.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(IntentionError::InvalidPrior {
                node: "I_P",
                reason: format!("{:?} is not a distribution", self.priority),
            });
        }
        if !(0.0..=1.0).contains(&self.situation_concentration) {
            return Err(IntentionError::InvalidPrior {
                node: "I_CS",
                reason: format!("concentration {}", self.situation_concentration),
            });
        }
        Ok(())
    }
}

/// Real-valued measurement families sharing a range with their intention node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Dcpa,
    FrontCrossing,
    Midpoint,
    Tcpa,
    GroundSide,
    GroundFront,
}

/// Equal-width bins over `[0, upper]`; the last bin absorbs everything above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    pub bins: usize,
    pub dcpa_max: f64,
    pub front_crossing_max: f64,
    pub midpoint_max: f64,
    pub tcpa_max: f64,
    pub ground_side_max: f64,
    pub ground_front_max: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            bins: 10,
            dcpa_max: 1500.0,
            front_crossing_max: 2000.0,
            midpoint_max: 600.0,
            tcpa_max: 5000.0,
            ground_side_max: 700.0,
            ground_front_max: 800.0,
        }
    }
}

impl Discretization {
    pub fn upper(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Dcpa => self.dcpa_max,
            Quantity::FrontCrossing => self.front_crossing_max,
            Quantity::Midpoint => self.midpoint_max,
            Quantity::Tcpa => self.tcpa_max,
            Quantity::GroundSide => self.ground_side_max,
            Quantity::GroundFront => self.ground_front_max,
        }
    }

    pub fn bin(&self, q: Quantity, value: f64) -> Result<usize, IntentionError> {
        real_to_bin(value, self.upper(q), self.bins)
    }

    /// Bin edges `[0, w, 2w, ..., upper]`.
    pub fn edges(&self, q: Quantity) -> Vec<f64> {
        let upper = self.upper(q);
        (0..=self.bins).map(|k| upper * k as f64 / self.bins as f64).collect()
    }

    pub fn validate(&self) -> Result<(), IntentionError> {
        if self.bins < 2 {
            return Err(IntentionError::InvalidDiscretization(format!("{} bins", self.bins)));
        }
        for q in [
            Quantity::Dcpa,
            Quantity::FrontCrossing,
            Quantity::Midpoint,
            Quantity::Tcpa,
            Quantity::GroundSide,
            Quantity::GroundFront,
        ] {
            let u = self.upper(q);
            if !(u.is_finite() && u > 0.0) {
                return Err(IntentionError::InvalidDiscretization(format!("{q:?} upper {u}")));
            }
        }
        Ok(())
    }
}

/// Measurements towards one obstacle ship, real values already binned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShipMeasurement {
    pub dcpa_bin: usize,
    pub df_bin: usize,
    pub dm_bin: usize,
    pub tcpa_bin: usize,
    pub passed: bool,
    pub passing_side: Side,
    pub midpoint_side: Side,
    pub situation: Situation,
}

/// Every measurement node state of one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    pub ships: Vec<ShipMeasurement>,
    pub cic: CourseChange,
    pub cis: SpeedChange,
    pub ccc: bool,
    pub dgsb_bin: usize,
    pub dgps_bin: usize,
    pub dgf_bin: usize,
    pub wprb: Trend,
    pub wprd: Trend,
    pub wpah: bool,
}

/// State indices shared by the network and the predicates.
pub mod states {
    use crate::geometry::{CourseChange, Side, SpeedChange, Trend};

    pub const FALSE: usize = 0;
    pub const TRUE: usize = 1;
    pub const STAND_ON: usize = 0;
    pub const GIVE_WAY: usize = 1;
    pub const HIGHER: usize = 0;
    pub const SIMILAR: usize = 1;
    pub const LOWER: usize = 2;

    pub const BINARY: &[&str] = &["false", "true"];
    pub const ROLE: &[&str] = &["SO", "GW"];
    pub const SIDE: &[&str] = &["starboard", "port"];
    pub const COURSE: &[&str] = &["starboard", "port", "straight"];
    pub const SPEED: &[&str] = &["higher", "lower", "none"];
    pub const TREND: &[&str] = &["decreasing", "increasing", "neither"];
    pub const PRIORITY: &[&str] = &["higher", "similar", "lower"];
    pub const SITUATION: &[&str] = &["HO", "OT_en", "OT_ing", "CR_PS", "CR_SS"];

    pub fn side(s: Side) -> usize {
        match s {
            Side::Starboard => 0,
            Side::Port => 1,
        }
    }

    pub fn course(c: CourseChange) -> usize {
        match c {
            CourseChange::Starboard => 0,
            CourseChange::Port => 1,
            CourseChange::Straight => 2,
        }
    }

    pub fn speed(c: SpeedChange) -> usize {
        match c {
            SpeedChange::Higher => 0,
            SpeedChange::Lower => 1,
            SpeedChange::None => 2,
        }
    }

    pub fn trend(t: Trend) -> usize {
        match t {
            Trend::Decreasing => 0,
            Trend::Increasing => 1,
            Trend::Neither => 2,
        }
    }
}
