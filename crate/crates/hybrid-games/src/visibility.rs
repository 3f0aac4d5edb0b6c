//! Geometric occlusion detection between rectangular agents.
//!
//! Two agents are considered mutually visible when some line segment from
//! a boundary sample point of one body to a boundary sample point of the
//! other crosses no occluding rectangle. Sampling under-approximates
//! visibility (the continuum of boundary points is replaced by corners
//! plus a few interior points per edge); the iterative solver is agnostic
//! to how occlusions are detected, so finer tests can be swapped in.

use nalgebra::Vector2;

use crate::error::GameError;
use crate::game::{partition_from_flags, InformationSchedule, TrajectoryIterate};

/// A rectangle with arbitrary planar orientation. `length` extends along
/// the heading direction, `width` across it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedRectangle {
    pub center: Vector2<f64>,
    pub length: f64,
    pub width: f64,
    /// Radians, counter-clockwise from the +x axis.
    pub heading: f64,
}

impl OrientedRectangle {
    pub fn new(center: Vector2<f64>, length: f64, width: f64, heading: f64) -> Self {
        debug_assert!(length > 0.0 && width > 0.0);
        Self { center, length, width, heading }
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Vector2<f64>; 4] {
        let (sin, cos) = self.heading.sin_cos();
        let half_l = 0.5 * self.length;
        let half_w = 0.5 * self.width;
        let along = Vector2::new(cos, sin);
        let across = Vector2::new(-sin, cos);
        [
            self.center + along * half_l + across * half_w,
            self.center - along * half_l + across * half_w,
            self.center - along * half_l - across * half_w,
            self.center + along * half_l - across * half_w,
        ]
    }

    /// World point to body-frame coordinates.
    fn to_frame(&self, p: Vector2<f64>) -> Vector2<f64> {
        let (sin, cos) = self.heading.sin_cos();
        let d = p - self.center;
        Vector2::new(cos * d.x + sin * d.y, -sin * d.x + cos * d.y)
    }

    /// Closed-set containment.
    pub fn contains(&self, p: Vector2<f64>) -> bool {
        let q = self.to_frame(p);
        q.x.abs() <= 0.5 * self.length && q.y.abs() <= 0.5 * self.width
    }

    /// Boundary sample points: the four corners plus `samples_per_edge`
    /// interior points per edge at fractions `k / (samples_per_edge + 1)`.
    /// Doubling via `s -> 2s + 1` yields a superset of the previous points.
    pub fn boundary_samples(&self, samples_per_edge: usize) -> Vec<Vector2<f64>> {
        let corners = self.corners();
        let mut pts = Vec::with_capacity(4 + 4 * samples_per_edge);
        for e in 0..4 {
            let a = corners[e];
            let b = corners[(e + 1) % 4];
            pts.push(a);
            for k in 1..=samples_per_edge {
                let f = k as f64 / (samples_per_edge + 1) as f64;
                pts.push(a + (b - a) * f);
            }
        }
        pts
    }
}

fn orient(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Is the collinear point `c` within the bounding box of segment `[a, b]`?
fn on_segment(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> bool {
    c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
}

/// Closed-set segment/segment intersection through orientation signs.
fn segments_intersect(p1: Vector2<f64>, p2: Vector2<f64>, q1: Vector2<f64>, q2: Vector2<f64>) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);

    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Closed-set test of segment `[a, b]` against a rectangle, evaluated in
/// the rectangle's axis-aligned frame.
pub fn segment_intersects_rectangle(a: Vector2<f64>, b: Vector2<f64>, rect: &OrientedRectangle) -> bool {
    let p1 = rect.to_frame(a);
    let p2 = rect.to_frame(b);
    let half_l = 0.5 * rect.length;
    let half_w = 0.5 * rect.width;

    // Separating-slab rejection (also handles the far-away case exactly).
    if (p1.x < -half_l && p2.x < -half_l)
        || (p1.x > half_l && p2.x > half_l)
        || (p1.y < -half_w && p2.y < -half_w)
        || (p1.y > half_w && p2.y > half_w)
    {
        return false;
    }
    let inside = |p: Vector2<f64>| p.x.abs() <= half_l && p.y.abs() <= half_w;
    if inside(p1) || inside(p2) {
        return true;
    }
    let c = [
        Vector2::new(half_l, half_w),
        Vector2::new(-half_l, half_w),
        Vector2::new(-half_l, -half_w),
        Vector2::new(half_l, -half_w),
    ];
    (0..4).any(|e| segments_intersect(p1, p2, c[e], c[(e + 1) % 4]))
}

/// Closed-set overlap test between two oriented rectangles (separating
/// axis theorem over both bodies' edge normals).
pub fn rectangles_intersect(a: &OrientedRectangle, b: &OrientedRectangle) -> bool {
    let ca = a.corners();
    let cb = b.corners();
    for rect in [a, b] {
        let (sin, cos) = rect.heading.sin_cos();
        for axis in [Vector2::new(cos, sin), Vector2::new(-sin, cos)] {
            let proj = |pts: &[Vector2<f64>; 4]| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in pts {
                    let v = axis.dot(p);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            };
            let (alo, ahi) = proj(&ca);
            let (blo, bhi) = proj(&cb);
            if ahi < blo || bhi < alo {
                return false;
            }
        }
    }
    true
}

/// Can some sampled boundary point of `rect_a` see some sampled boundary
/// point of `rect_b` past every occluder?
///
/// The occluder list must not contain the two bodies themselves.
pub fn pair_visible(
    rect_a: &OrientedRectangle,
    rect_b: &OrientedRectangle,
    occluders: &[OrientedRectangle],
    samples_per_edge: usize,
) -> bool {
    if occluders.is_empty() {
        return true;
    }
    let pts_a = rect_a.boundary_samples(samples_per_edge);
    let pts_b = rect_b.boundary_samples(samples_per_edge);
    for p in &pts_a {
        for q in &pts_b {
            if !occluders.iter().any(|o| segment_intersects_rectangle(*p, *q, o)) {
                return true;
            }
        }
    }
    false
}

/// Rectangle dimensions of an agent body; the pose comes from the
/// trajectory.
#[derive(Clone, Copy, Debug)]
pub struct BodyTemplate {
    pub length: f64,
    pub width: f64,
}

impl BodyTemplate {
    pub fn at(&self, center: Vector2<f64>, heading: f64) -> OrientedRectangle {
        OrientedRectangle::new(center, self.length, self.width, heading)
    }
}

/// Occluding geometry: fixed rectangles plus agent bodies that occlude
/// every pair they are not part of.
#[derive(Clone, Debug, Default)]
pub struct OccluderSet {
    pub static_rects: Vec<OrientedRectangle>,
    /// Player indices whose own body blocks other pairs' sight lines.
    pub attached_players: Vec<usize>,
}

/// Per-stage pose of player `i`, read from a stacked state laid out in
/// four-entry blocks `(x, y, speed, heading)` per player.
pub fn player_pose(state: &nalgebra::DVector<f64>, player: usize) -> (Vector2<f64>, f64) {
    let o = 4 * player;
    (Vector2::new(state[o], state[o + 1]), state[o + 3])
}

/// Derive the information schedule of a trajectory: a stage is occluded
/// when any of the designated interacting pairs has no clear sight line,
/// with all bodies (and agent-attached occluders) posed from that stage.
pub fn find_occlusions(
    trajectory: &TrajectoryIterate,
    geometry: &[BodyTemplate],
    occluders: &OccluderSet,
    interacting_pairs: &[(usize, usize)],
    samples_per_edge: usize,
) -> Result<InformationSchedule, GameError> {
    let num_players = geometry.len();
    for &(i, j) in interacting_pairs {
        if i >= num_players || j >= num_players {
            return Err(GameError::UnknownPlayer { index: i.max(j), count: num_players });
        }
    }
    for &k in &occluders.attached_players {
        if k >= num_players {
            return Err(GameError::UnknownPlayer { index: k, count: num_players });
        }
    }

    let mut flags = Vec::with_capacity(trajectory.horizon());
    for state in &trajectory.states {
        let bodies: Vec<OrientedRectangle> = (0..num_players)
            .map(|i| {
                let (c, h) = player_pose(state, i);
                geometry[i].at(c, h)
            })
            .collect();
        let occluded = interacting_pairs.iter().any(|&(i, j)| {
            let mut blockers = occluders.static_rects.clone();
            for &k in &occluders.attached_players {
                if k != i && k != j {
                    blockers.push(bodies[k]);
                }
            }
            !pair_visible(&bodies[i], &bodies[j], &blockers, samples_per_edge)
        });
        flags.push(occluded);
    }
    partition_from_flags(&flags)
}
