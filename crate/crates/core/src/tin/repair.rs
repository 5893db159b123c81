//! Bridge/tunnel correction: removes flat triangles whose three vertices
//! come from the same contour.
//!
//! Each flat triangle is handled in index order with the first strategy
//! that applies:
//! 1. flip an edge whose opposite vertex has a different elevation, if the
//!    quadrilateral is strictly convex;
//! 2. split at the centroid, with z the inverse-distance-squared mean of the
//!    8 nearest input vertices whose elevation differs from the flat one;
//! 3. report it as unfixable.

use super::predicates::orient;
use super::{Tin, TinVertex, TriangleFlag};

pub const DEFAULT_FLAT_TOLERANCE: f64 = 1e-6;
const IDW_NEIGHBOURS: usize = 8;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RepairReport {
    pub flat_before: usize,
    pub flipped: usize,
    pub split: usize,
    /// Vertex triples of flat triangles that could not be repaired.
    pub unfixable: Vec<[usize; 3]>,
}

struct Work {
    vertices: Vec<TinVertex>,
    tris: Vec<[usize; 3]>,
    adj: Vec<[Option<usize>; 3]>,
    flags: Vec<TriangleFlag>,
}

impl Work {
    fn is_flat(&self, t: usize, tol: f64) -> bool {
        let z = self.tris[t].map(|i| self.vertices[i].z);
        z[0].max(z[1]).max(z[2]) - z[0].min(z[1]).min(z[2]) <= tol
    }

    fn replace_neighbor(&mut self, t: Option<usize>, old: usize, new: usize) {
        if let Some(t) = t {
            for slot in self.adj[t].iter_mut() {
                if *slot == Some(old) {
                    *slot = Some(new);
                }
            }
        }
    }

    /// Flips the edge opposite `tris[t][i]` when the result is valid and the
    /// new diagonal joins vertices of different elevation.
    fn try_flip(&mut self, t: usize, i: usize, tol: f64) -> bool {
        let Some(u) = self.adj[t][i] else {
            return false;
        };
        let v0 = self.tris[t][i];
        let v1 = self.tris[t][(i + 1) % 3];
        let v2 = self.tris[t][(i + 2) % 3];
        let Some(j) = (0..3).find(|&j| self.tris[u][j] != v1 && self.tris[u][j] != v2) else {
            return false;
        };
        let d = self.tris[u][j];
        if (self.vertices[d].z - self.vertices[v0].z).abs() <= tol {
            return false;
        }
        let p = |k: usize| self.vertices[k].xy();
        if orient(p(v0), p(v1), p(d)) <= 0.0 || orient(p(v0), p(d), p(v2)) <= 0.0 {
            return false;
        }
        // Outer neighbours before the flip.
        let across_v2v0 = self.adj[t][(i + 1) % 3];
        let across_v0v1 = self.adj[t][(i + 2) % 3];
        // u is (d, v2, v1) counter-clockwise.
        let across_v1d = self.adj[u][(j + 1) % 3];
        let across_dv2 = self.adj[u][(j + 2) % 3];

        self.tris[t] = [v0, v1, d];
        self.adj[t] = [across_v1d, Some(u), across_v0v1];
        self.tris[u] = [v0, d, v2];
        self.adj[u] = [across_dv2, across_v2v0, Some(t)];
        self.replace_neighbor(across_v1d, u, t);
        self.replace_neighbor(across_v2v0, t, u);
        self.flags[t] = TriangleFlag::Repaired;
        self.flags[u] = TriangleFlag::Repaired;
        true
    }

    fn split(&mut self, t: usize, vertex: TinVertex) {
        let s = self.vertices.len();
        self.vertices.push(vertex);
        let [a, b, c] = self.tris[t];
        let [n0, n1, n2] = self.adj[t];
        let t1 = self.tris.len();
        let t2 = t1 + 1;
        self.tris[t] = [s, b, c];
        self.adj[t] = [n0, Some(t1), Some(t2)];
        self.tris.push([a, s, c]);
        self.adj.push([Some(t), n1, Some(t2)]);
        self.tris.push([a, b, s]);
        self.adj.push([Some(t), Some(t1), n2]);
        self.replace_neighbor(n1, t, t1);
        self.replace_neighbor(n2, t, t2);
        self.flags[t] = TriangleFlag::Repaired;
        self.flags.push(TriangleFlag::Repaired);
        self.flags.push(TriangleFlag::Repaired);
    }
}

/// Inverse-distance-squared elevation from the nearest input vertices whose
/// z differs from `flat_z` by more than `tol`.
fn idw_elevation(vertices: &[TinVertex], x: f64, y: f64, flat_z: f64, tol: f64) -> Option<f64> {
    let mut candidates: Vec<(f64, usize)> = vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| (v.z - flat_z).abs() > tol)
        .map(|(i, v)| ((v.x - x).powi(2) + (v.y - y).powi(2), i))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if candidates.len() > IDW_NEIGHBOURS {
        candidates.select_nth_unstable_by(IDW_NEIGHBOURS - 1, cmp);
        candidates.truncate(IDW_NEIGHBOURS);
    }
    candidates.sort_by(cmp);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(d2, i) in &candidates {
        let w = 1.0 / d2;
        num += w * vertices[i].z;
        den += w;
    }
    Some(num / den)
}

/// Repairs flat triangles. Input vertex elevations and the hull are never
/// changed; repaired triangles are flagged.
pub fn remove_bridge_tunnel_edges(tin: &Tin, flat_tolerance: f64) -> (Tin, RepairReport) {
    let tol = flat_tolerance.max(0.0);
    let original = tin.vertices.len();
    let mut work = Work {
        vertices: tin.vertices.clone(),
        tris: tin.triangles.iter().map(|t| t.v).collect(),
        adj: tin.triangles.iter().map(|t| t.n).collect(),
        flags: tin.flags.clone(),
    };
    let mut report = RepairReport::default();
    let initial = work.tris.len();
    report.flat_before = (0..initial).filter(|&t| work.is_flat(t, tol)).count();

    for t in 0..initial {
        if !work.is_flat(t, tol) {
            continue;
        }
        if (0..3).any(|i| work.try_flip(t, i, tol)) {
            report.flipped += 1;
            continue;
        }
        let [a, b, c] = work.tris[t].map(|i| work.vertices[i]);
        let (cx, cy) = ((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
        let flat_z = a.z;
        match idw_elevation(&work.vertices[..original], cx, cy, flat_z, tol) {
            Some(z) if (z - flat_z).abs() > tol => {
                work.split(t, TinVertex::new(cx, cy, z));
                report.split += 1;
            }
            _ => report.unfixable.push(work.tris[t]),
        }
    }

    let repaired = Tin::assemble(work.vertices, work.tris, work.adj, work.flags);
    (repaired, report)
}
