use std::collections::BTreeSet;

use morphokit::tin::{triangulate, TinVertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(n: usize, seed: u64) -> Vec<TinVertex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (x, y) = (rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0));
            TinVertex::new(x, y, 3.0 + 0.2 * x - 0.07 * y)
        })
        .collect()
}

fn cross(a: &TinVertex, b: &TinVertex, c: &TinVertex) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Circumcircle containment via the lifted 3x3 determinant, `a, b, c` CCW.
fn in_circumcircle(a: &TinVertex, b: &TinVertex, c: &TinVertex, d: &TinVertex) -> bool {
    let row = |p: &TinVertex| {
        let (x, y) = (p.x - d.x, p.y - d.y);
        [x, y, x * x + y * y]
    };
    let [r0, r1, r2] = [row(a), row(b), row(c)];
    let det = r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
        + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0]);
    det > 0.0
}

/// Every triple whose circumcircle is empty, as sorted index triples.
fn brute_force_delaunay(points: &[TinVertex]) -> BTreeSet<[usize; 3]> {
    let n = points.len();
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, mut b, mut c) = (&points[i], &points[j], &points[k]);
                let o = cross(a, b, c);
                if o == 0.0 {
                    continue;
                }
                if o < 0.0 {
                    std::mem::swap(&mut b, &mut c);
                }
                if (0..n).all(|m| m == i || m == j || m == k || !in_circumcircle(a, b, c, &points[m])) {
                    out.insert([i, j, k]);
                }
            }
        }
    }
    out
}

fn hull_size(points: &[TinVertex]) -> usize {
    let n = points.len();
    let mut on_hull = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && (0..n).all(|k| k == i || k == j || cross(&points[i], &points[j], &points[k]) > 0.0) {
                on_hull[i] = true;
            }
        }
    }
    on_hull.iter().filter(|&&h| h).count()
}

fn tin_triangles(points: &[TinVertex]) -> BTreeSet<[usize; 3]> {
    let tin = triangulate(points).unwrap();
    tin.triangles()
        .iter()
        .map(|t| {
            let mut v = t.v;
            v.sort_unstable();
            v
        })
        .collect()
}

#[test]
fn matches_brute_force_triangle_set() {
    for seed in 0..5 {
        let points = random_points(60, seed);
        assert_eq!(tin_triangles(&points), brute_force_delaunay(&points), "seed {seed}");
    }
}

#[test]
fn triangle_count_follows_euler() {
    let points = random_points(200, 11);
    let tin = triangulate(&points).unwrap();
    let h = hull_size(&points);
    assert_eq!(tin.triangles().len(), 2 * points.len() - 2 - h);
    assert_eq!(tin.hull_vertex_count(), h);
    tin.check_topology().unwrap();
}

#[test]
fn every_triangle_has_an_empty_circumcircle() {
    let points = random_points(200, 12);
    let tin = triangulate(&points).unwrap();
    for t in tin.triangles() {
        let [a, b, c] = t.v.map(|i| &tin.vertices()[i]);
        assert!(cross(a, b, c) > 0.0, "not counter-clockwise");
        assert!(tin.vertices().iter().all(|d| !in_circumcircle(a, b, c, d)));
    }
}

#[test]
fn linear_field_is_reproduced() {
    let points = random_points(200, 13);
    let tin = triangulate(&points).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut checked = 0;
    while checked < 1000 {
        let (x, y) = (rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0));
        if let Some(z) = tin.interpolate(x, y) {
            assert!((z - (3.0 + 0.2 * x - 0.07 * y)).abs() < 1e-9);
            checked += 1;
        }
    }
}

#[test]
fn insertion_order_does_not_change_the_surface() {
    let points = random_points(100, 15);
    let mut reversed = points.clone();
    reversed.reverse();
    let (a, b) = (triangulate(&points).unwrap(), triangulate(&reversed).unwrap());
    let n = points.len();
    let remap: BTreeSet<[usize; 3]> = tin_triangles(&reversed)
        .into_iter()
        .map(|t| {
            let mut v = t.map(|i| n - 1 - i);
            v.sort_unstable();
            v
        })
        .collect();
    assert_eq!(tin_triangles(&points), remap);
    assert_eq!(a.triangles().len(), b.triangles().len());
}
