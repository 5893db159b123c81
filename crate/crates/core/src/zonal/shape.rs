//! Planar polygon measurements.

use crate::vector_io::GeoPoint;

/// Shoelace area of a closed ring, positive when counter-clockwise.
pub fn signed_area(ring: &[GeoPoint]) -> f64 {
    let twice: f64 = ring.windows(2).map(|w| w[0].x * w[1].y - w[1].x * w[0].y).sum();
    twice / 2.0
}

pub fn path_length(path: &[GeoPoint]) -> f64 {
    path.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

fn cross(o: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[GeoPoint]) -> Vec<GeoPoint> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower = half_hull(pts.iter());
    let mut upper = half_hull(pts.iter().rev());
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn half_hull<'a>(points: impl Iterator<Item = &'a GeoPoint>) -> Vec<GeoPoint> {
    let mut chain: Vec<GeoPoint> = Vec::new();
    for &p in points {
        while chain.len() >= 2 && cross(chain[chain.len() - 2], chain[chain.len() - 1], p) <= 0.0 {
            chain.pop();
        }
        chain.push(p);
    }
    chain
}

/// Largest distance between any two points.
pub fn diameter(points: &[GeoPoint]) -> f64 {
    let hull = convex_hull(points);
    let mut best = 0.0f64;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max(a.distance(b));
        }
    }
    best
}

/// Width (shorter side) of the minimum-area enclosing rectangle.
///
/// One side of the optimal rectangle is collinear with a hull edge, so
/// every edge direction is tried.
pub fn min_area_rect_width(points: &[GeoPoint]) -> f64 {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return 0.0;
    }
    let mut best_area = f64::INFINITY;
    let mut best_width = 0.0;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let len = a.distance(&b);
        let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
        let (mut umin, mut umax, mut vmax) = (0.0f64, 0.0f64, 0.0f64);
        for p in &hull {
            let (dx, dy) = (p.x - a.x, p.y - a.y);
            let u = dx * ux + dy * uy;
            let v = -dx * uy + dy * ux;
            umin = umin.min(u);
            umax = umax.max(u);
            vmax = vmax.max(v);
        }
        let area = (umax - umin) * vmax;
        if area < best_area {
            best_area = area;
            best_width = (umax - umin).min(vmax);
        }
    }
    best_width
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(c: &[(f64, f64)]) -> Vec<GeoPoint> {
        c.iter().map(|&(x, y)| GeoPoint::new(x, y)).collect()
    }

    #[test]
    fn rectangle_measures() {
        let ring = pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (0.0, 3.0), (0.0, 0.0)]);
        assert_eq!(signed_area(&ring), 12.0);
        assert_eq!(path_length(&ring), 14.0);
        assert_eq!(diameter(&ring), 5.0);
        assert!((min_area_rect_width(&ring) - 3.0).abs() < 1e-12);
        assert_eq!(convex_hull(&ring).len(), 4);
    }

    #[test]
    fn rotated_rectangle_width() {
        let t = 0.3f64;
        let (c, s) = (t.cos(), t.sin());
        let corners = [(0.0, 0.0), (10.0, 0.0), (10.0, 2.0), (0.0, 2.0)];
        let ring: Vec<_> = corners.iter().map(|&(x, y)| GeoPoint::new(c * x - s * y, s * x + c * y)).collect();
        assert!((min_area_rect_width(&ring) - 2.0).abs() < 1e-9);
        assert!((diameter(&ring) - 104f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn collinear_points_have_no_width() {
        let line = pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]);
        assert_eq!(min_area_rect_width(&line), 0.0);
        assert!((diameter(&line) - 8f64.sqrt()).abs() < 1e-12);
    }
}
