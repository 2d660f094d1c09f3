//! Distance to grounding hazards inside sectors of the vessel domain.
//!
//! Only polygon vertices are considered. [`PolygonMap::densified`] inserts
//! extra vertices along edges so the vertex distance bounds the edge
//! distance to within half the spacing.

use std::f64::consts::PI;

use super::{wrap_pi, GeometryError, GeometryParams, ShipState};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolygonMap {
    /// Closed rings: first vertex repeated at the end.
    rings: Vec<Vec<[f64; 2]>>,
    /// Free-form description of the source coordinate frame.
    pub crs: String,
}

impl PolygonMap {
    pub fn new(rings: Vec<Vec<[f64; 2]>>, crs: impl Into<String>) -> Result<Self, GeometryError> {
        let mut closed = Vec::with_capacity(rings.len());
        for mut ring in rings {
            if ring.iter().flatten().any(|c| !c.is_finite()) {
                return Err(GeometryError::NonFinite("polygon ring"));
            }
            if ring.len() > 1 && ring.first() == ring.last() {
                ring.pop();
            }
            ring.dedup();
            if ring.len() < 3 {
                return Err(GeometryError::DegenerateRing(ring.len()));
            }
            let first = ring[0];
            ring.push(first);
            closed.push(ring);
        }
        Ok(Self { rings: closed, crs: crs.into() })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn rings(&self) -> &[Vec<[f64; 2]>] {
        &self.rings
    }

    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }

    /// Distinct vertices (the closing duplicate is skipped).
    pub fn vertices(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.rings.iter().flat_map(|r| r[..r.len() - 1].iter().copied())
    }

    /// Copy with extra vertices so no edge is longer than `spacing`.
    pub fn densified(&self, spacing: f64) -> Self {
        assert!(spacing > 0.0, "spacing must be positive");
        let rings = self
            .rings
            .iter()
            .map(|ring| {
                let mut out = Vec::new();
                for w in ring.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                    let n = (len / spacing).ceil().max(1.0) as usize;
                    for k in 0..n {
                        let f = k as f64 / n as f64;
                        out.push([a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f]);
                    }
                }
                out.push(out[0]);
                out
            })
            .collect();
        Self { rings, crs: self.crs.clone() }
    }

    /// Rings restricted to vertices inside an axis-aligned box.
    pub fn clip_to_box(&self, min: [f64; 2], max: [f64; 2]) -> Self {
        let inside = |v: &[f64; 2]| v[0] >= min[0] && v[0] <= max[0] && v[1] >= min[1] && v[1] <= max[1];
        let rings = self
            .rings
            .iter()
            .filter_map(|r| {
                let mut kept: Vec<[f64; 2]> = r[..r.len() - 1].iter().copied().filter(inside).collect();
                if kept.is_empty() {
                    return None;
                }
                kept.push(kept[0]);
                Some(kept)
            })
            .collect();
        Self { rings, crs: self.crs.clone() }
    }

    /// Applies a rigid transform to every vertex.
    pub fn map_vertices(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let rings = self.rings.iter().map(|r| r.iter().map(|&v| f(v)).collect()).collect();
        Self { rings, crs: self.crs.clone() }
    }
}

/// Minimum distance from the vessel to any vertex whose bearing lies in the
/// closed sector `[start, end]` (absolute angles, unwrapped about `course`).
/// Returns `f64::INFINITY` when no vertex qualifies.
pub fn sector_ground_distance(
    x: f64,
    y: f64,
    course: f64,
    map: &PolygonMap,
    start: f64,
    end: f64,
) -> f64 {
    let lo = start - course;
    let hi = end - course;
    let mut best = f64::INFINITY;
    for [vx, vy] in map.vertices() {
        let dx = vx - x;
        let dy = vy - y;
        if dx.hypot(dy) < 1e-6 {
            // A vertex under the vessel lies in every sector.
            return 0.0;
        }
        let rel = wrap_pi(dy.atan2(dx) - course);
        let inside = [rel, rel - 2.0 * PI, rel + 2.0 * PI].iter().any(|r| *r >= lo && *r <= hi);
        if inside {
            best = best.min(dx.hypot(dy));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundDistances {
    pub starboard: f64,
    pub port: f64,
    pub front: f64,
}

/// Nearest hazard in the starboard, port and front zones of the vessel.
pub fn grounding_measurements(
    state: &ShipState,
    map: &PolygonMap,
    params: &GeometryParams,
) -> GroundDistances {
    let c = state.cog;
    let f = params.front_half_angle();
    GroundDistances {
        starboard: sector_ground_distance(state.x, state.y, c, map, c - PI, c - f),
        port: sector_ground_distance(state.x, state.y, c, map, c + f, c + PI),
        front: sector_ground_distance(state.x, state.y, c, map, c - f, c + f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(cx: f64, cy: f64, half: f64) -> Vec<[f64; 2]> {
        vec![
            [cx - half, cy - half],
            [cx + half, cy - half],
            [cx + half, cy + half],
            [cx - half, cy + half],
        ]
    }

    #[test]
    fn rings_are_closed_and_validated() {
        let m = PolygonMap::new(vec![square(0.0, 0.0, 1.0)], "local").unwrap();
        assert_eq!(m.rings()[0].len(), 5);
        assert_eq!(m.rings()[0][0], m.rings()[0][4]);
        assert_eq!(m.vertices().count(), 4);
        assert_eq!(
            PolygonMap::new(vec![vec![[0.0, 0.0], [1.0, 0.0]]], "local"),
            Err(GeometryError::DegenerateRing(2))
        );
    }

    #[test]
    fn vertex_dead_ahead() {
        let m = PolygonMap::new(vec![vec![[500.0, 0.0], [600.0, 50.0], [600.0, -50.0]]], "").unwrap();
        let d = sector_ground_distance(0.0, 0.0, 0.0, &m, -PI / 8.0, PI / 8.0);
        assert!((d - 500.0).abs() < 1e-9);
    }

    #[test]
    fn boundary_vertex_is_included() {
        let a = PI / 8.0;
        let v = [100.0 * a.cos(), 100.0 * a.sin()];
        let m = PolygonMap::new(vec![vec![v, [1000.0, 1000.0], [1000.0, 1100.0]]], "").unwrap();
        let d = sector_ground_distance(0.0, 0.0, 0.0, &m, -a, a + 1e-12);
        assert!((d - 100.0).abs() < 1e-9);
    }

    #[test]
    fn empty_map_is_saturated() {
        let d = sector_ground_distance(0.0, 0.0, 0.0, &PolygonMap::empty(), -1.0, 1.0);
        assert_eq!(d, f64::INFINITY);
    }

    #[test]
    fn starboard_hazard_only() {
        // Heading north; island due east.
        let s = ShipState::from_compass(0.0, 0.0, 0.0, 5.0, 0.0);
        let m = PolygonMap::new(vec![square(400.0, 0.0, 50.0)], "").unwrap();
        let g = grounding_measurements(&s, &m, &GeometryParams::default());
        assert!(g.starboard.is_finite());
        assert_eq!(g.port, f64::INFINITY);
        assert_eq!(g.front, f64::INFINITY);
    }

    #[test]
    fn densify_bounds_edge_distance() {
        let m = PolygonMap::new(vec![square(0.0, 0.0, 500.0)], "").unwrap();
        let d = m.densified(50.0);
        for w in d.rings()[0].windows(2) {
            assert!((w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]) <= 50.0 + 1e-9);
        }
    }

    #[test]
    fn clipping_keeps_inside_vertices() {
        let m = PolygonMap::new(vec![square(0.0, 0.0, 10.0), square(100.0, 100.0, 1.0)], "").unwrap();
        let c = m.clip_to_box([-20.0, -20.0], [20.0, 20.0]);
        assert_eq!(c.rings().len(), 1);
        assert_eq!(c.vertices().count(), 4);
    }
}
