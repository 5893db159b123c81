use morphokit::synthetic::{concentric_square_rings, u_valley};
use morphokit::tin::{remove_bridge_tunnel_edges, triangulate, Tin, TriangleFlag, DEFAULT_FLAT_TOLERANCE};
use morphokit::vector_io::{validate_contours, Geometry, VectorLayer};

fn tin_of(layer: &VectorLayer) -> Tin {
    triangulate(&validate_contours(layer).unwrap().vertices).unwrap()
}

fn flat_triangles(tin: &Tin) -> usize {
    (0..tin.triangles().len())
        .filter(|&t| {
            let z = tin.triangle_points(t).map(|v| v.z);
            z[0].max(z[1]).max(z[2]) - z[0].min(z[1]).min(z[2]) <= DEFAULT_FLAT_TOLERANCE
        })
        .count()
}

#[test]
fn rings_lose_their_flat_triangles() {
    let tin = tin_of(&concentric_square_rings(50.0, 25.0, 10.0));
    let before = flat_triangles(&tin);
    let corner_flat = (0..tin.triangles().len()).any(|t| tin.triangle_points(t).iter().all(|v| v.z == 100.0));
    assert!(before > 0 && corner_flat);

    let (fixed, report) = remove_bridge_tunnel_edges(&tin, DEFAULT_FLAT_TOLERANCE);
    assert_eq!(report.flat_before, before);
    assert!(report.unfixable.is_empty());
    assert_eq!(flat_triangles(&fixed), 0);
    fixed.check_topology().unwrap();

    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        for d in [30.0, 37.5, 45.0, 48.0] {
            let z = fixed.interpolate(sx * d, sy * d).unwrap();
            assert!(z > 90.0 && z < 100.0, "({}, {}) -> {z}", sx * d, sy * d);
        }
    }
}

#[test]
fn repair_keeps_input_vertices_and_hull() {
    let tin = tin_of(&concentric_square_rings(50.0, 25.0, 10.0));
    let (fixed, report) = remove_bridge_tunnel_edges(&tin, DEFAULT_FLAT_TOLERANCE);
    let n = tin.vertices().len();
    assert_eq!(&fixed.vertices()[..n], tin.vertices());
    assert_eq!(fixed.vertices().len(), n + report.split);
    assert_eq!(fixed.hull_vertex_count(), tin.hull_vertex_count());
    let repaired = fixed.flags().iter().filter(|f| **f == TriangleFlag::Repaired).count();
    assert!(repaired > 0 && report.flipped + report.split > 0);
}

#[test]
fn valley_axis_stays_monotone() {
    let valley = u_valley();
    let tin = tin_of(&valley.contours);
    let (fixed, report) = remove_bridge_tunnel_edges(&tin, DEFAULT_FLAT_TOLERANCE);
    assert!(report.flat_before > 0);
    assert_eq!(flat_triangles(&fixed), 0);
    let Geometry::Polyline(axis) = &valley.axis else { unreachable!() };
    let (a, b) = (axis[0], axis[1]);
    let profile: Vec<f64> = (0..50)
        .map(|k| {
            let t = k as f64 / 49.0;
            fixed.interpolate(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t).unwrap()
        })
        .collect();
    assert!(profile.windows(2).all(|w| w[1] <= w[0]), "{profile:?}");
}
