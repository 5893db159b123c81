//! Triangulated irregular network over contour vertices and spot heights.
//!
//! Construction is an unconstrained Delaunay triangulation with exact
//! predicates. Cocircular ties are resolved toward the lowest vertex index,
//! so the result only depends on the (deduplicated) input order through the
//! vertex numbering. Triangles are stored in a canonical order: each one is
//! rotated to start at its smallest vertex and the list is sorted.

mod predicates;
mod repair;
mod triangulate;

use std::collections::HashMap;

use thiserror::Error;

pub use predicates::{incircle, orient};
pub use repair::{remove_bridge_tunnel_edges, RepairReport, DEFAULT_FLAT_TOLERANCE};

use triangulate::{hilbert_key, Mesh};

#[derive(Debug, Error, PartialEq)]
pub enum TinError {
    #[error("need at least 3 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    Collinear,
    #[error("vertex {index} is not finite")]
    NonFinite { index: usize },
    #[error("points {first} and {second} share ({x}, {y}) but differ in elevation")]
    ConflictingDuplicate {
        first: usize,
        second: usize,
        x: f64,
        y: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinVertex {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TinVertex {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        TinVertex { x, y, z }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Counter-clockwise vertex indices; `n[i]` is the neighbour across the
/// edge opposite `v[i]`, `None` on the hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    pub v: [usize; 3],
    pub n: [Option<usize>; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleFlag {
    Natural,
    Repaired,
}

#[derive(Debug, Clone)]
pub struct Tin {
    vertices: Vec<TinVertex>,
    triangles: Vec<Triangle>,
    flags: Vec<TriangleFlag>,
    index: TriangleIndex,
}

impl PartialEq for Tin {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.triangles == other.triangles && self.flags == other.flags
    }
}

/// Removes exact (x, y) duplicates, keeping the first occurrence.
fn dedup_vertices(points: &[TinVertex]) -> Result<Vec<TinVertex>, TinError> {
    let key = |v: f64| if v == 0.0 { 0u64 } else { v.to_bits() };
    let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(TinError::NonFinite { index: i });
        }
        match seen.get(&(key(p.x), key(p.y))) {
            Some(&first) => {
                if points[first].z != p.z {
                    return Err(TinError::ConflictingDuplicate {
                        first,
                        second: i,
                        x: p.x,
                        y: p.y,
                    });
                }
            }
            None => {
                seen.insert((key(p.x), key(p.y)), i);
                out.push(*p);
            }
        }
    }
    Ok(out)
}

/// Delaunay triangulation of the points.
///
/// Exact (x, y) duplicates with equal z are collapsed onto their first
/// occurrence; duplicates with different z are rejected.
pub fn triangulate(points: &[TinVertex]) -> Result<Tin, TinError> {
    let vertices = dedup_vertices(points)?;
    if vertices.len() < 3 {
        return Err(TinError::TooFewPoints(vertices.len()));
    }
    let pts: Vec<[f64; 2]> = vertices.iter().map(TinVertex::xy).collect();

    let mut bounds = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in &pts {
        bounds[0] = bounds[0].min(p[0]);
        bounds[1] = bounds[1].min(p[1]);
        bounds[2] = bounds[2].max(p[0]);
        bounds[3] = bounds[3].max(p[1]);
    }
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by_key(|&i| (hilbert_key(pts[i][0], pts[i][1], bounds), i));

    let (a, b) = (order[0], order[1]);
    let third = order[2..]
        .iter()
        .position(|&c| orient(pts[a], pts[b], pts[c]) != 0.0)
        .map(|k| k + 2)
        .ok_or(TinError::Collinear)?;
    let c = order[third];
    let seed = if orient(pts[a], pts[b], pts[c]) > 0.0 { [a, b, c] } else { [a, c, b] };

    let mut mesh = Mesh::new(&pts, seed);
    for (k, &p) in order.iter().enumerate() {
        if k < 2 || k == third {
            continue;
        }
        mesh.insert(p);
    }
    let (tris, adj) = mesh.solid();
    let flags = vec![TriangleFlag::Natural; tris.len()];
    Ok(Tin::assemble(vertices, tris, adj, flags))
}

impl Tin {
    /// Canonicalizes triangle order and builds the point-location index.
    fn assemble(
        vertices: Vec<TinVertex>,
        tris: Vec<[usize; 3]>,
        adj: Vec<[Option<usize>; 3]>,
        flags: Vec<TriangleFlag>,
    ) -> Tin {
        let rotated: Vec<([usize; 3], [Option<usize>; 3])> = tris
            .iter()
            .zip(&adj)
            .map(|(v, n)| {
                let k = (0..3).min_by_key(|&i| v[i]).unwrap_or(0);
                ([v[k], v[(k + 1) % 3], v[(k + 2) % 3]], [n[k], n[(k + 1) % 3], n[(k + 2) % 3]])
            })
            .collect();
        let mut order: Vec<usize> = (0..rotated.len()).collect();
        order.sort_by_key(|&t| rotated[t].0);
        let mut new_index = vec![0usize; rotated.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let triangles: Vec<Triangle> = order
            .iter()
            .map(|&old| {
                let (v, n) = rotated[old];
                Triangle {
                    v,
                    n: n.map(|x| x.map(|t| new_index[t])),
                }
            })
            .collect();
        let flags = order.iter().map(|&old| flags[old]).collect();
        let index = TriangleIndex::build(&vertices, &triangles);
        Tin {
            vertices,
            triangles,
            flags,
            index,
        }
    }

    pub fn vertices(&self) -> &[TinVertex] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn flags(&self) -> &[TriangleFlag] {
        &self.flags
    }

    pub fn triangle_points(&self, t: usize) -> [TinVertex; 3] {
        self.triangles[t].v.map(|i| self.vertices[i])
    }

    /// Number of vertices on the convex hull boundary.
    pub fn hull_vertex_count(&self) -> usize {
        let mut on_hull = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for i in 0..3 {
                if tri.n[i].is_none() {
                    on_hull[tri.v[(i + 1) % 3]] = true;
                    on_hull[tri.v[(i + 2) % 3]] = true;
                }
            }
        }
        on_hull.iter().filter(|&&h| h).count()
    }

    /// Linear interpolation on the containing facet, `None` outside the hull.
    ///
    /// Points on shared edges or vertices use the lowest-index triangle that
    /// contains them, so the answer does not depend on query order.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let t = self.locate(x, y)?;
        Some(self.facet_value(t, x, y))
    }

    /// Lowest-index triangle containing the point (boundary inclusive).
    pub fn locate(&self, x: f64, y: f64) -> Option<usize> {
        let q = [x, y];
        self.index.candidates(x, y).iter().map(|&t| t as usize).find(|&t| {
            let [a, b, c] = self.triangles[t].v.map(|i| self.vertices[i].xy());
            orient(a, b, q) >= 0.0 && orient(b, c, q) >= 0.0 && orient(c, a, q) >= 0.0
        })
    }

    fn facet_value(&self, t: usize, x: f64, y: f64) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        let area = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
        let p = [x, y];
        let total = area(a.xy(), b.xy(), c.xy());
        let wa = area(p, b.xy(), c.xy()) / total;
        let wb = area(a.xy(), p, c.xy()) / total;
        let wc = area(a.xy(), b.xy(), p) / total;
        wa * a.z + wb * b.z + wc * c.z
    }

    /// Checks orientation, area and neighbour symmetry. Used by tests and
    /// after repairs.
    pub fn check_topology(&self) -> Result<(), String> {
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.v.map(|i| self.vertices[i].xy());
            if orient(a, b, c) <= 0.0 {
                return Err(format!("triangle {t} is not counter-clockwise"));
            }
            for i in 0..3 {
                let (u, v) = (tri.v[(i + 1) % 3], tri.v[(i + 2) % 3]);
                if let Some(n) = tri.n[i] {
                    let other = &self.triangles[n];
                    let back = (0..3).find(|&j| other.v[(j + 1) % 3] == v && other.v[(j + 2) % 3] == u);
                    match back {
                        Some(j) if other.n[j] == Some(t) => {}
                        _ => return Err(format!("neighbour link {t}->{n} is not symmetric")),
                    }
                }
            }
        }
        Ok(())
    }

    /// GeoJSON dump with one polygon per triangle (`z_mean`, `flag`).
    pub fn to_geojson(&self) -> serde_json::Value {
        let features: Vec<serde_json::Value> = self
            .triangles
            .iter()
            .zip(&self.flags)
            .map(|(tri, flag)| {
                let pts = tri.v.map(|i| self.vertices[i]);
                let ring: Vec<[f64; 2]> = pts.iter().chain(std::iter::once(&pts[0])).map(TinVertex::xy).collect();
                serde_json::json!({
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                    "properties": {
                        "z_mean": (pts[0].z + pts[1].z + pts[2].z) / 3.0,
                        "flag": match flag {
                            TriangleFlag::Natural => "natural",
                            TriangleFlag::Repaired => "repaired",
                        },
                    }
                })
            })
            .collect();
        serde_json::json!({
            "type": "FeatureCollection",
            "crs_note": "planar coordinates in meters",
            "features": features,
        })
    }
}

/// Uniform bucket grid over triangle bounding boxes. Buckets keep triangle
/// indices in ascending order.
#[derive(Debug, Clone)]
struct TriangleIndex {
    xmin: f64,
    ymin: f64,
    xmax: f64,
    ymax: f64,
    nx: usize,
    ny: usize,
    cell_w: f64,
    cell_h: f64,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl TriangleIndex {
    fn build(vertices: &[TinVertex], triangles: &[Triangle]) -> Self {
        let mut xmin = f64::INFINITY;
        let mut ymin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for v in vertices {
            xmin = xmin.min(v.x);
            ymin = ymin.min(v.y);
            xmax = xmax.max(v.x);
            ymax = ymax.max(v.y);
        }
        let side = ((triangles.len() as f64).sqrt().ceil() as usize).clamp(1, 4096);
        let (nx, ny) = (side, side);
        let cell_w = ((xmax - xmin) / nx as f64).max(f64::MIN_POSITIVE);
        let cell_h = ((ymax - ymin) / ny as f64).max(f64::MIN_POSITIVE);
        let mut index = TriangleIndex {
            xmin,
            ymin,
            xmax,
            ymax,
            nx,
            ny,
            cell_w,
            cell_h,
            offsets: Vec::new(),
            items: Vec::new(),
        };
        let ranges: Vec<(usize, usize, usize, usize)> = triangles
            .iter()
            .map(|tri| {
                let p = tri.v.map(|i| vertices[i]);
                let (x0, x1) = (p[0].x.min(p[1].x).min(p[2].x), p[0].x.max(p[1].x).max(p[2].x));
                let (y0, y1) = (p[0].y.min(p[1].y).min(p[2].y), p[0].y.max(p[1].y).max(p[2].y));
                let (cx0, cy0) = index.bucket(x0, y0);
                let (cx1, cy1) = index.bucket(x1, y1);
                (cx0, cx1, cy0, cy1)
            })
            .collect();
        let mut counts = vec![0u32; nx * ny + 1];
        for &(cx0, cx1, cy0, cy1) in &ranges {
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    counts[cy * nx + cx + 1] += 1;
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; counts[nx * ny] as usize];
        for (t, &(cx0, cx1, cy0, cy1)) in ranges.iter().enumerate() {
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    let b = cy * nx + cx;
                    items[fill[b] as usize] = t as u32;
                    fill[b] += 1;
                }
            }
        }
        index.offsets = counts;
        index.items = items;
        index
    }

    fn bucket(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = (((x - self.xmin) / self.cell_w).floor().max(0.0) as usize).min(self.nx - 1);
        let cy = (((y - self.ymin) / self.cell_h).floor().max(0.0) as usize).min(self.ny - 1);
        (cx, cy)
    }

    fn candidates(&self, x: f64, y: f64) -> &[u32] {
        if !(x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax) {
            return &[];
        }
        let (cx, cy) = self.bucket(x, y);
        let b = cy * self.nx + cx;
        &self.items[self.offsets[b] as usize..self.offsets[b + 1] as usize]
    }
}
