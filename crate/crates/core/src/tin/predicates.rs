//! Adaptive-precision orientation and in-circle tests.

use robust::Coord;

#[inline]
fn coord(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Positive when `a, b, c` turn counter-clockwise, zero when collinear.
#[inline]
pub fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

/// Positive when `d` lies strictly inside the circle through the
/// counter-clockwise triangle `a, b, c`.
#[inline]
pub fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
}

/// In-circle test with a symbolic tie-break for cocircular points.
///
/// Ties are resolved as if every vertex were lifted below the paraboloid by
/// an infinitesimal that shrinks with its index, so the lowest-index vertex
/// of the four dominates. That is a consistent lifting, which makes the
/// triangulation unique for any insertion order.
pub fn incircle_sos(tri: [(usize, [f64; 2]); 3], query: (usize, [f64; 2])) -> bool {
    let [(ia, a), (ib, b), (ic, c)] = tri;
    let (id, d) = query;
    let det = incircle(a, b, c, d);
    if det != 0.0 {
        return det > 0.0;
    }
    let lowest = ia.min(ib).min(ic).min(id);
    if lowest == id {
        return true;
    }
    // Lowering a triangle vertex pushes the query inside exactly when the
    // query lies across the edge opposite that vertex.
    let (e0, e1) = if lowest == ia {
        (b, c)
    } else if lowest == ib {
        (c, a)
    } else {
        (a, b)
    };
    orient(e0, e1, d) < 0.0
}
