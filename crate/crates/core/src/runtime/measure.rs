use crate::geometry::{
    classify_colregs, course_speed_changes, cpa_linear, cross_front_distance, grounding_measurements,
    has_passed, midpoint_cpa, passing_side, state_at_or_before, waypoint_trends, GeometryParams,
    PolygonMap, ShipState, Situation, Trend, Waypoint,
};
use crate::intention::{Discretization, IntentionError, MeasurementVector, Quantity, ShipMeasurement};

/// Fixed inputs shared by every measurement of one encounter.
#[derive(Debug, Clone, Copy)]
pub struct MeasureContext<'a> {
    /// Reference state when the situation started.
    pub situation_start: &'a ShipState,
    /// Situation per obstacle, classified at the situation start.
    pub situations: &'a [Situation],
    pub map: &'a PolygonMap,
    pub waypoint: Option<Waypoint>,
    pub geometry: &'a GeometryParams,
    pub disc: &'a Discretization,
}

/// Situation of each obstacle relative to the reference.
pub fn classify_all(reference: &ShipState, obstacles: &[ShipState], params: &GeometryParams) -> Vec<Situation> {
    obstacles.iter().map(|o| classify_colregs(reference, o, params)).collect()
}

/// Measurement vector of the reference at `now`.
///
/// `history` holds earlier reference samples (time-sorted, may include
/// `now`) and drives the course-changing flag; `waypoint_before` is the
/// state the waypoint trends compare against.
pub fn measure(
    now: &ShipState,
    history: &[ShipState],
    waypoint_before: Option<&ShipState>,
    obstacles: &[ShipState],
    ctx: &MeasureContext<'_>,
) -> Result<MeasurementVector, IntentionError> {
    let disc = ctx.disc;
    let mut ships = Vec::with_capacity(obstacles.len());
    for (obs, &situation) in obstacles.iter().zip(ctx.situations) {
        let cpa = cpa_linear(now, obs);
        let (dm, midpoint_side) = midpoint_cpa(now, obs);
        ships.push(ShipMeasurement {
            dcpa_bin: disc.bin(Quantity::Dcpa, cpa.dcpa)?,
            df_bin: disc.bin(Quantity::FrontCrossing, cross_front_distance(now, obs))?,
            dm_bin: disc.bin(Quantity::Midpoint, dm)?,
            tcpa_bin: disc.bin(Quantity::Tcpa, cpa.tcpa)?,
            passed: has_passed(now, obs),
            passing_side: passing_side(now, obs),
            midpoint_side,
            situation,
        });
    }
    let change = course_speed_changes(now, ctx.situation_start, history, ctx.geometry);
    let ground = grounding_measurements(now, ctx.map, ctx.geometry);
    let (wprb, wprd, wpah) = match ctx.waypoint {
        Some(wp) => {
            let w = waypoint_trends(waypoint_before, now, wp, ctx.geometry);
            (w.wprb, w.wprd, w.wpah)
        }
        None => (Trend::Neither, Trend::Neither, false),
    };
    Ok(MeasurementVector {
        ships,
        cic: change.cic,
        cis: change.cis,
        ccc: change.ccc,
        dgsb_bin: disc.bin(Quantity::GroundSide, ground.starboard)?,
        dgps_bin: disc.bin(Quantity::GroundSide, ground.port)?,
        dgf_bin: disc.bin(Quantity::GroundFront, ground.front)?,
        wprb,
        wprd,
        wpah,
    })
}

/// Measurement vector of a live step: waypoint trends look back one
/// configured window in `history`.
pub fn measure_step(
    now: &ShipState,
    history: &[ShipState],
    obstacles: &[ShipState],
    ctx: &MeasureContext<'_>,
) -> Result<MeasurementVector, IntentionError> {
    let before = state_at_or_before(history, now.t - ctx.geometry.wpt_window_s);
    measure(now, history, before, obstacles, ctx)
}
