//! Closest point of approach and related passing geometry, all under
//! constant course and speed.

use super::{cross, dot, GeometryError, ShipState, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cpa {
    /// Seconds from now, never negative.
    pub tcpa: f64,
    pub dcpa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentCpa {
    /// Seconds after the segment start, within the segment.
    pub t_opt: f64,
    pub d_opt: f64,
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Unconstrained minimizer of |dp + dv·t|, or `None` without relative motion.
fn closing_time(dp: [f64; 2], dv: [f64; 2]) -> Option<f64> {
    let vv = dot(dv, dv);
    if vv <= f64::EPSILON * f64::EPSILON {
        None
    } else {
        Some(-dot(dp, dv) / vv)
    }
}

pub fn cpa_linear(a: &ShipState, b: &ShipState) -> Cpa {
    let dp = sub(b.position(), a.position());
    let dv = sub(b.velocity(), a.velocity());
    match closing_time(dp, dv) {
        Some(t) if t > 0.0 => {
            let rel = [dp[0] + dv[0] * t, dp[1] + dv[1] * t];
            Cpa { tcpa: t, dcpa: norm(rel) }
        }
        _ => Cpa { tcpa: 0.0, dcpa: norm(dp) },
    }
}

fn segment_course(curr: &ShipState, next: &ShipState) -> f64 {
    let dx = next.x - curr.x;
    let dy = next.y - curr.y;
    if dx == 0.0 && dy == 0.0 {
        curr.cog
    } else {
        dy.atan2(dx)
    }
}

/// Closest approach while both vessels sail between two consecutive
/// samples. Course comes from the sampled displacement, speed from the
/// current sample; the minimizer is clamped to the first vessel's segment.
pub fn segment_cpa(
    a_curr: &ShipState,
    a_next: &ShipState,
    b_curr: &ShipState,
    b_next: &ShipState,
) -> Result<SegmentCpa, GeometryError> {
    for (c, n) in [(a_curr, a_next), (b_curr, b_next)] {
        if !(n.t > c.t) {
            return Err(GeometryError::NonIncreasingTime { curr: c.t, next: n.t });
        }
    }
    let chi_a = segment_course(a_curr, a_next);
    let chi_b = segment_course(b_curr, b_next);
    let va = [a_curr.sog * chi_a.cos(), a_curr.sog * chi_a.sin()];
    let vb = [b_curr.sog * chi_b.cos(), b_curr.sog * chi_b.sin()];
    let dp = sub(b_curr.position(), a_curr.position());
    let dv = sub(vb, va);
    let duration = a_next.t - a_curr.t;
    let t_opt = closing_time(dp, dv).map_or(0.0, |t| t.clamp(0.0, duration));
    let d_opt = norm([dp[0] + dv[0] * t_opt, dp[1] + dv[1] * t_opt]);
    Ok(SegmentCpa { t_opt, d_opt })
}

/// How far ahead of `obs` the reference vessel crosses the obstacle's track
/// line; `f64::INFINITY` when it never crosses in front.
pub fn cross_front_distance(reference: &ShipState, obs: &ShipState) -> f64 {
    let h = obs.heading();
    let dp = sub(reference.position(), obs.position());
    let dv = sub(reference.velocity(), obs.velocity());
    // Lateral and along-track offsets of the reference in the obstacle's frame.
    let lat0 = cross(h, dp);
    let lat1 = cross(h, dv);
    let along0 = dot(h, dp);
    let along1 = dot(h, dv);
    if lat1 == 0.0 {
        if lat0 != 0.0 {
            return f64::INFINITY;
        }
        // Already on the track line and staying there.
        if along0 <= 0.0 {
            return f64::INFINITY;
        }
        return if along1 < 0.0 { 0.0 } else { along0 };
    }
    let t = -lat0 / lat1;
    if t < 0.0 {
        return f64::INFINITY;
    }
    let along = along0 + along1 * t;
    if along >= -1e-9 {
        along.max(0.0)
    } else {
        f64::INFINITY
    }
}

fn side_of(heading: [f64; 2], offset: [f64; 2]) -> Side {
    // Near-zero cross products count as dead ahead, i.e. starboard.
    if cross(heading, offset) > 1e-9 * (offset[0].hypot(offset[1]) + 1.0) {
        Side::Port
    } else {
        Side::Starboard
    }
}

/// Distance from the reference vessel's course ray to the current midpoint
/// between the vessels, and the side of the track the midpoint lies on.
pub fn midpoint_cpa(reference: &ShipState, obs: &ShipState) -> (f64, Side) {
    let mid = [(reference.x + obs.x) / 2.0, (reference.y + obs.y) / 2.0];
    let rel = sub(mid, reference.position());
    let h = reference.heading();
    let side = side_of(h, rel);
    if reference.sog <= 0.0 {
        return (norm(rel), side);
    }
    let along = dot(h, rel);
    let dm = if along <= 0.0 { norm(rel) } else { cross(h, rel).abs() };
    (dm, side)
}

/// Side of the reference vessel on which `obs` lies at the CPA instant.
pub fn passing_side(reference: &ShipState, obs: &ShipState) -> Side {
    let cpa = cpa_linear(reference, obs);
    let a = reference.propagate(reference.t + cpa.tcpa);
    let b = obs.propagate(obs.t + cpa.tcpa);
    side_of(reference.heading(), sub(b.position(), a.position()))
}

/// True when the range is opening, i.e. the CPA lies in the past.
pub fn has_passed(reference: &ShipState, obs: &ShipState) -> bool {
    let dp = sub(obs.position(), reference.position());
    let dv = sub(obs.velocity(), reference.velocity());
    matches!(closing_time(dp, dv), Some(t) if t < -1e-9)
}
