//! Small planar geometry helpers: orientation tests, proper segment
//! intersection, point-in-triangle and point-to-segment distance.

use crate::pws::{det2, Vec2};

#[inline]
fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Twice the signed area of the triangle `(a, b, c)`.
#[inline]
pub fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    det2(sub(b, a), sub(c, a))
}

/// True when the open segments `a0 a1` and `b0 b1` cross in one interior
/// point. Touching endpoints and collinear overlaps do not count.
pub fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = orient(a0, a1, b0);
    let d2 = orient(a0, a1, b1);
    let d3 = orient(b0, b1, a0);
    let d4 = orient(b0, b1, a1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Crossing point of two segments known to cross properly.
pub fn crossing_point(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> Vec2 {
    let r = sub(a1, a0);
    let s = sub(b1, b0);
    let denom = det2(r, s);
    let t = det2(sub(b0, a0), s) / denom;
    [a0[0] + t * r[0], a0[1] + t * r[1]]
}

/// True when `p` lies inside or on the triangle `(a, b, c)` (any orientation).
pub fn point_in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    let d1 = orient(a, b, p);
    let d2 = orient(b, c, p);
    let d3 = orient(c, a, p);
    let has_neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let has_pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(has_neg && has_pos)
}

/// Euclidean distance from `p` to the closed segment `a b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

#[inline]
pub fn norm(v: Vec2) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}
