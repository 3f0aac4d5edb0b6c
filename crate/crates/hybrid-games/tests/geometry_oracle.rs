//! Exact-arithmetic oracle for the segment/rectangle predicate: the same
//! closed-set test evaluated over rationals, compared against the f64
//! implementation on axis-aligned rectangles with dyadic coordinates
//! (where the f64 frame transform is exact).

use nalgebra::Vector2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybrid_games::visibility::{segment_intersects_rectangle, OrientedRectangle};

type Q = BigRational;

fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone)]
struct QPoint {
    x: Q,
    y: Q,
}

fn orient(a: &QPoint, b: &QPoint, c: &QPoint) -> Q {
    (&b.x - &a.x) * (&c.y - &a.y) - (&b.y - &a.y) * (&c.x - &a.x)
}

fn on_segment(a: &QPoint, b: &QPoint, c: &QPoint) -> bool {
    let (xlo, xhi) = if a.x <= b.x { (&a.x, &b.x) } else { (&b.x, &a.x) };
    let (ylo, yhi) = if a.y <= b.y { (&a.y, &b.y) } else { (&b.y, &a.y) };
    &c.x >= xlo && &c.x <= xhi && &c.y >= ylo && &c.y <= yhi
}

fn segments_intersect(p1: &QPoint, p2: &QPoint, q1: &QPoint, q2: &QPoint) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let pos = |v: &Q| v > &Q::zero();
    let neg = |v: &Q| v < &Q::zero();
    if ((pos(&d1) && neg(&d2)) || (neg(&d1) && pos(&d2)))
        && ((pos(&d3) && neg(&d4)) || (neg(&d3) && pos(&d4)))
    {
        return true;
    }
    (d1.is_zero() && on_segment(q1, q2, p1))
        || (d2.is_zero() && on_segment(q1, q2, p2))
        || (d3.is_zero() && on_segment(p1, p2, q1))
        || (d4.is_zero() && on_segment(p1, p2, q2))
}

/// Exact closed-set segment-vs-box test; the box is centered at the
/// origin with half extents `hl`, `hw`.
fn segment_hits_box_exact(p1: &QPoint, p2: &QPoint, hl: &Q, hw: &Q) -> bool {
    let inside = |p: &QPoint| {
        let neg_hl = -hl.clone();
        let neg_hw = -hw.clone();
        p.x >= neg_hl && p.x <= *hl && p.y >= neg_hw && p.y <= *hw
    };
    if inside(p1) || inside(p2) {
        return true;
    }
    let corners = [
        QPoint { x: hl.clone(), y: hw.clone() },
        QPoint { x: -hl.clone(), y: hw.clone() },
        QPoint { x: -hl.clone(), y: -hw.clone() },
        QPoint { x: hl.clone(), y: -hw.clone() },
    ];
    (0..4).any(|e| segments_intersect(p1, p2, &corners[e], &corners[(e + 1) % 4]))
}

/// Random quarter-integer coordinates are exactly representable in f64 and
/// exercise many touching/collinear configurations against a unit-scaled
/// box.
#[test]
fn f64_predicate_matches_exact_rational_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let rect = OrientedRectangle::new(Vector2::new(0.0, 0.0), 4.0, 2.0, 0.0);
    let hl = q(2, 1);
    let hw = q(1, 1);

    let mut hits = 0;
    for case in 0..4000 {
        // Numerators over a fixed denominator of 4, range [-4, 4].
        let coords: Vec<i64> = (0..4).map(|_| rng.gen_range(-16..=16)).collect();
        let a = Vector2::new(coords[0] as f64 / 4.0, coords[1] as f64 / 4.0);
        let b = Vector2::new(coords[2] as f64 / 4.0, coords[3] as f64 / 4.0);
        let exact = segment_hits_box_exact(
            &QPoint { x: q(coords[0], 4), y: q(coords[1], 4) },
            &QPoint { x: q(coords[2], 4), y: q(coords[3], 4) },
            &hl,
            &hw,
        );
        let approx = segment_intersects_rectangle(a, b, &rect);
        assert_eq!(approx, exact, "case {case}: segment {a:?} -> {b:?}");
        if exact {
            hits += 1;
        }
    }
    // The sample actually exercises both verdicts.
    assert!(hits > 400 && hits < 3600, "degenerate sample: {hits} hits");
}

/// Corner-grazing segments around every corner, including exactly
/// touching, separated by one quarter unit, and collinear-overlapping
/// configurations.
#[test]
fn corner_touch_cases_match_oracle() {
    let rect = OrientedRectangle::new(Vector2::new(0.0, 0.0), 4.0, 2.0, 0.0);
    let hl = q(2, 1);
    let hw = q(1, 1);
    for &(cx, cy) in &[(2i64, 1i64), (-2, 1), (-2, -1), (2, -1)] {
        for &(dx, dy) in &[(1i64, 1i64), (1, 0), (0, 1), (3, 2), (-1, 2)] {
            for scale in 0..3i64 {
                // Segment from the (possibly offset) corner heading outward.
                let sx = cx * 4 + scale * dx;
                let sy = cy * 4 + scale * dy;
                let ex = sx + 8 * dx;
                let ey = sy + 8 * dy;
                let exact = segment_hits_box_exact(
                    &QPoint { x: q(sx, 4), y: q(sy, 4) },
                    &QPoint { x: q(ex, 4), y: q(ey, 4) },
                    &hl,
                    &hw,
                );
                let approx = segment_intersects_rectangle(
                    Vector2::new(sx as f64 / 4.0, sy as f64 / 4.0),
                    Vector2::new(ex as f64 / 4.0, ey as f64 / 4.0),
                    &rect,
                );
                assert_eq!(approx, exact, "corner ({cx},{cy}) dir ({dx},{dy}) scale {scale}");
                if scale == 0 {
                    // Exactly touching a corner is a hit under the closed-set
                    // convention.
                    assert!(exact);
                }
            }
        }
    }
}
