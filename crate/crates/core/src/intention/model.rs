//! Boolean predicates of the model nodes.
//!
//! Each kind fixes its parent order; see the variant docs. Threshold tests
//! compare bin indices, with equal bins counting as "not greater".

use crate::bn::VarId;

use super::states::{FALSE, GIVE_WAY, LOWER, SIMILAR, STAND_ON, TRUE};
use super::IntentionError;
use crate::geometry::Situation;

const STARBOARD: usize = 0;
const PORT: usize = 1;
const STRAIGHT: usize = 2;
const NO_SPEED_CHANGE: usize = 2;
const DECREASING: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelNodeKind {
    /// `[DCPA_i, I_SD, DF_i, I_SDF]`
    SafeDistance,
    /// `[M_P_i, SD_i]`
    SafelyPassed,
    /// `[SD_i]`
    CorrectBeingOvertaken,
    /// `[SD_i]`
    CorrectOvertaking,
    /// `[DM_i, I_SDM, MPS_i]`
    CorrectHeadOn,
    /// `[SD_i, PS_i]`
    CorrectCrossingStarboard,
    /// `[SD_i, CIC]`
    CorrectCrossingPort,
    /// `[WPRD, WPRB, WPAH]`
    NavigationalManeuver,
    /// `[NAV_M, SD_i, I_CS_i, M_P_i, DM_i, I_SDM]`
    CorrectNavigationalManeuver,
    /// `[I_P_i, I_CS_i]`; true means give-way.
    Role,
    /// `[SA, PA, CIC, PS_i]`
    GoodSeamanship,
    /// `[I_GS, GS_i, I_CC, I_CS_i, C_OTing_i, C_OTen_i, C_HO_i, C_CR_SS_i, C_CR_PS_i]`
    CorrectEvasiveManeuver,
    /// `[CIC, CIS]` followed by `[R_j, CEM_j, P_j]` for each other ship `j`.
    StandsOnCorrectly { others: usize },
    /// `[DGSB, DGPS, I_SDGS, CIC]`
    SafeGroundSide,
    /// `[DGF, I_SDGF, CIC]`
    SafeGroundFront,
    /// `[SDG_S, SDG_F]`
    SafeGround,
    /// `[CEM_i, CCC, TCPA_i, I_AT, SOC_i]`
    GivesWayCorrectly,
    /// `[P_i, R_i, SOC_i, GWC_i]`
    CorrectCollisionAvoidance,
    /// `[C_COLAV_M_i, C_NAV_M_i, SDG, I_G]`
    CompatibleShip,
    /// `[C_1, ..., C_n, I_U]`
    CompatibleAll { ships: usize },
    /// `[SA previous, CIC]`
    StarboardAction,
    /// `[PA previous, CIC]`
    PortAction,
}

impl ModelNodeKind {
    pub fn arity(self) -> usize {
        use ModelNodeKind::*;
        match self {
            CorrectBeingOvertaken | CorrectOvertaking => 1,
            SafelyPassed | CorrectCrossingStarboard | CorrectCrossingPort | Role | SafeGround => 2,
            StarboardAction | PortAction => 2,
            CorrectHeadOn | NavigationalManeuver | SafeGroundFront => 3,
            SafeDistance | GoodSeamanship | SafeGroundSide | CorrectCollisionAvoidance | CompatibleShip => 4,
            GivesWayCorrectly => 5,
            CorrectNavigationalManeuver => 6,
            CorrectEvasiveManeuver => 9,
            StandsOnCorrectly { others } => 2 + 3 * others,
            CompatibleAll { ships } => ships + 1,
        }
    }

    pub fn label(self) -> &'static str {
        use ModelNodeKind::*;
        match self {
            SafeDistance => "SD",
            SafelyPassed => "P",
            CorrectBeingOvertaken => "C_OTen",
            CorrectOvertaking => "C_OTing",
            CorrectHeadOn => "C_HO",
            CorrectCrossingStarboard => "C_CR_SS",
            CorrectCrossingPort => "C_CR_PS",
            NavigationalManeuver => "NAV_M",
            CorrectNavigationalManeuver => "C_NAV_M",
            Role => "R",
            GoodSeamanship => "GS",
            CorrectEvasiveManeuver => "CEM",
            StandsOnCorrectly { .. } => "SOC",
            SafeGroundSide => "SDG_S",
            SafeGroundFront => "SDG_F",
            SafeGround => "SDG",
            GivesWayCorrectly => "GWC",
            CorrectCollisionAvoidance => "C_COLAV_M",
            CompatibleShip => "C_i",
            CompatibleAll { .. } => "C",
            StarboardAction => "SA",
            PortAction => "PA",
        }
    }
}

/// One model node as wired into a network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelNodeSpec {
    pub var: VarId,
    pub name: String,
    pub kind: ModelNodeKind,
    pub parents: Vec<VarId>,
}

/// Truth value of a model node for one assignment of its parents.
pub fn model_node_truth(kind: ModelNodeKind, s: &[usize]) -> Result<bool, IntentionError> {
    if s.len() != kind.arity() {
        return Err(IntentionError::MissingParent { node: kind.label(), expected: kind.arity(), got: s.len() });
    }
    Ok(truth(kind, s))
}

/// Same as [`model_node_truth`] without the arity check.
pub(crate) fn truth(kind: ModelNodeKind, s: &[usize]) -> bool {
    use ModelNodeKind::*;
    let t = |i: usize| s[i] == TRUE;
    let ho = Situation::HeadOn.index();
    match kind {
        SafeDistance => s[0] > s[1] && s[2] > s[3],
        SafelyPassed => t(0) && t(1),
        CorrectBeingOvertaken | CorrectOvertaking => t(0),
        CorrectHeadOn => s[0] > s[1] && s[2] == PORT,
        CorrectCrossingStarboard => t(0) && s[1] == PORT,
        CorrectCrossingPort => t(0) && s[1] != PORT,
        NavigationalManeuver => s[0] == DECREASING && (s[1] == DECREASING || t(2)),
        CorrectNavigationalManeuver => {
            t(0) && ((t(1) && s[2] != ho) || t(3) || (s[4] > s[5] && s[2] == ho))
        }
        Role => {
            let cs = s[1];
            s[0] == LOWER
                || (s[0] == SIMILAR
                    && (cs == ho
                        || cs == Situation::CrossingStarboard.index()
                        || cs == Situation::Overtaking.index()))
        }
        // Course-change and passing-side labels line up on starboard/port;
        // "straight" differs from both.
        GoodSeamanship => !(t(0) && t(1)) && s[2] != s[3],
        CorrectEvasiveManeuver => {
            let cs = s[3];
            let compliant = (cs == Situation::Overtaking.index() && t(4))
                || (cs == Situation::BeingOvertaken.index() && t(5))
                || (cs == ho && t(6))
                || (cs == Situation::CrossingStarboard.index() && t(7))
                || (cs == Situation::CrossingPort.index() && t(8));
            (!t(0) || t(1)) && (!t(2) || compliant)
        }
        StandsOnCorrectly { others } => {
            (s[0] == STRAIGHT && s[1] == NO_SPEED_CHANGE)
                || (0..others).any(|j| {
                    let b = 2 + 3 * j;
                    s[b] == GIVE_WAY && t(b + 1) && s[b + 2] == FALSE
                })
        }
        SafeGroundSide => {
            (s[0] > s[2] && s[3] == STARBOARD) || (s[1] > s[2] && s[3] == PORT) || s[3] == STRAIGHT
        }
        SafeGroundFront => s[0] > s[1] || s[2] != STRAIGHT,
        SafeGround => t(0) && t(1),
        GivesWayCorrectly => t(0) || t(1) || (s[2] > s[3] && t(4)),
        CorrectCollisionAvoidance => {
            let not_passed = s[0] == FALSE;
            (not_passed && s[1] == STAND_ON && t(2)) || (not_passed && s[1] == GIVE_WAY && t(3))
        }
        CompatibleShip => (t(0) || t(1)) && (t(2) || t(3)),
        CompatibleAll { ships } => s[..ships].iter().all(|&c| c == TRUE) || s[ships] == TRUE,
        StarboardAction => t(0) || s[1] == STARBOARD,
        PortAction => t(0) || s[1] == PORT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ModelNodeKind::*;

    fn f(kind: ModelNodeKind, s: &[usize]) -> bool {
        model_node_truth(kind, s).unwrap()
    }

    #[test]
    fn safe_distance_needs_both_margins() {
        assert!(f(SafeDistance, &[9, 3, 9, 2]));
        assert!(!f(SafeDistance, &[3, 3, 9, 2]));
        assert!(!f(SafeDistance, &[9, 3, 1, 2]));
    }

    #[test]
    fn role_cases() {
        let sim = SIMILAR;
        assert!(!f(Role, &[sim, Situation::CrossingPort.index()]));
        assert!(f(Role, &[sim, Situation::CrossingStarboard.index()]));
        assert!(f(Role, &[LOWER, Situation::CrossingPort.index()]));
        assert!(!f(Role, &[0, Situation::HeadOn.index()]));
    }

    #[test]
    fn compatibility_escape_hatch() {
        let all = CompatibleAll { ships: 2 };
        assert!(f(all, &[1, 1, 0]));
        assert!(f(all, &[0, 0, 1]));
        assert!(!f(all, &[1, 0, 0]));
    }

    #[test]
    fn safe_ground_truth_table() {
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(f(SafeGround, &[a, b]), a == 1 && b == 1);
            }
        }
    }

    #[test]
    fn ground_side_and_front_straight_clauses() {
        assert!(f(SafeGroundSide, &[0, 0, 9, STRAIGHT]));
        assert!(!f(SafeGroundSide, &[0, 9, 5, STARBOARD]));
        assert!(f(SafeGroundSide, &[0, 9, 5, PORT]));
        assert!(f(SafeGroundFront, &[0, 9, PORT]));
        assert!(!f(SafeGroundFront, &[0, 9, STRAIGHT]));
    }

    #[test]
    fn passed_with_navigation_is_correct() {
        // NAV_M true and M_P true, everything else unfavourable.
        assert!(f(CorrectNavigationalManeuver, &[1, 0, Situation::HeadOn.index(), 1, 0, 9]));
    }

    #[test]
    fn stand_on_without_others_needs_steady_state() {
        let k = StandsOnCorrectly { others: 0 };
        assert!(f(k, &[STRAIGHT, NO_SPEED_CHANGE]));
        assert!(!f(k, &[PORT, NO_SPEED_CHANGE]));
        let k = StandsOnCorrectly { others: 1 };
        assert!(f(k, &[PORT, 0, GIVE_WAY, 1, 0]));
        assert!(!f(k, &[PORT, 0, GIVE_WAY, 1, 1]));
    }

    #[test]
    fn good_seamanship_forbids_zigzag() {
        assert!(!f(GoodSeamanship, &[1, 1, STRAIGHT, 0]));
        assert!(f(GoodSeamanship, &[1, 0, PORT, 0]));
        assert!(!f(GoodSeamanship, &[1, 0, STARBOARD, 0]));
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(
            model_node_truth(SafeDistance, &[1, 2]),
            Err(IntentionError::MissingParent { expected: 4, got: 2, .. })
        ));
    }
}
