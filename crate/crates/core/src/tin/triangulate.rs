//! Incremental Bowyer-Watson construction over a closed mesh.
//!
//! The convex hull is closed off with "ghost" triangles that share one
//! vertex at infinity, so every triangle always has three neighbours and
//! points outside the hull are handled by the same cavity code.

use super::predicates::{incircle_sos, orient};

pub(super) const GHOST: usize = usize::MAX;
const NO_TRI: usize = usize::MAX;

pub(super) struct Mesh<'a> {
    pts: &'a [[f64; 2]],
    pub(super) tris: Vec<[usize; 3]>,
    /// `adj[t][i]` is the triangle across the edge opposite `tris[t][i]`.
    pub(super) adj: Vec<[usize; 3]>,
    alive: Vec<bool>,
    free: Vec<usize>,
    stamp: Vec<u32>,
    epoch: u32,
    last: usize,
}

#[inline]
fn is_ghost(t: &[usize; 3]) -> bool {
    t.contains(&GHOST)
}

impl<'a> Mesh<'a> {
    /// Seeds the mesh with one counter-clockwise triangle and its three ghosts.
    pub(super) fn new(pts: &'a [[f64; 2]], seed: [usize; 3]) -> Self {
        let [a, b, c] = seed;
        debug_assert!(orient(pts[a], pts[b], pts[c]) > 0.0);
        let tris = vec![[a, b, c], [c, b, GHOST], [a, c, GHOST], [b, a, GHOST]];
        let mut mesh = Mesh {
            pts,
            adj: vec![[NO_TRI; 3]; tris.len()],
            alive: vec![true; tris.len()],
            tris,
            free: Vec::new(),
            stamp: vec![0; 4],
            epoch: 0,
            last: 0,
        };
        mesh.link_by_edges();
        mesh
    }

    fn link_by_edges(&mut self) {
        let mut edges = std::collections::HashMap::new();
        for (t, tri) in self.tris.iter().enumerate() {
            for i in 0..3 {
                edges.insert((tri[(i + 1) % 3], tri[(i + 2) % 3]), (t, i));
            }
        }
        for (t, tri) in self.tris.iter().enumerate() {
            for i in 0..3 {
                let (u, v) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                self.adj[t][i] = edges[&(v, u)].0;
            }
        }
    }

    fn point(&self, v: usize) -> [f64; 2] {
        self.pts[v]
    }

    fn in_conflict(&self, t: usize, p: usize) -> bool {
        let tri = self.tris[t];
        let q = self.pts[p];
        if let Some(g) = tri.iter().position(|&v| v == GHOST) {
            // Hull edge (a, b) with the outside on its left.
            let a = tri[(g + 1) % 3];
            let b = tri[(g + 2) % 3];
            let (pa, pb) = (self.point(a), self.point(b));
            let o = orient(pa, pb, q);
            if o != 0.0 {
                return o > 0.0;
            }
            // Collinear with the hull edge: conflict only strictly between.
            let dot = (q[0] - pa[0]) * (pb[0] - pa[0]) + (q[1] - pa[1]) * (pb[1] - pa[1]);
            let len2 = (pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2);
            return dot > 0.0 && dot < len2;
        }
        incircle_sos(
            [
                (tri[0], self.point(tri[0])),
                (tri[1], self.point(tri[1])),
                (tri[2], self.point(tri[2])),
            ],
            (p, q),
        )
    }

    /// Finds some triangle whose circumcircle holds `p`.
    fn locate_conflict(&self, p: usize) -> usize {
        let q = self.pts[p];
        let mut t = self.last;
        if !self.alive[t] || is_ghost(&self.tris[t]) {
            t = (0..self.tris.len())
                .find(|&i| self.alive[i] && !is_ghost(&self.tris[i]))
                .expect("mesh has a solid triangle");
        }
        let max_steps = 4 * self.tris.len() + 16;
        'walk: for _ in 0..max_steps {
            let tri = self.tris[t];
            if is_ghost(&tri) {
                if self.in_conflict(t, p) {
                    return t;
                }
                break;
            }
            for i in 0..3 {
                let a = self.point(tri[(i + 1) % 3]);
                let b = self.point(tri[(i + 2) % 3]);
                if orient(a, b, q) < 0.0 {
                    t = self.adj[t][i];
                    continue 'walk;
                }
            }
            return t;
        }
        // The walk should always terminate on a Delaunay mesh; a linear scan
        // keeps this correct if it ever does not.
        (0..self.tris.len())
            .find(|&i| self.alive[i] && self.in_conflict(i, p))
            .expect("every point conflicts with some triangle")
    }

    fn alloc(&mut self, tri: [usize; 3]) -> usize {
        if let Some(t) = self.free.pop() {
            self.tris[t] = tri;
            self.adj[t] = [NO_TRI; 3];
            self.alive[t] = true;
            t
        } else {
            self.tris.push(tri);
            self.adj.push([NO_TRI; 3]);
            self.alive.push(true);
            self.stamp.push(0);
            self.tris.len() - 1
        }
    }

    pub(super) fn insert(&mut self, p: usize) {
        let start = self.locate_conflict(p);
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;

        // Grow the cavity and record its boundary as (u, v, outside).
        let mut cavity = vec![start];
        self.stamp[start] = epoch;
        let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let n = self.adj[t][i];
                if self.stamp[n] == epoch {
                    continue;
                }
                let tri = self.tris[t];
                let (u, v) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                if self.in_conflict(n, p) {
                    self.stamp[n] = epoch;
                    cavity.push(n);
                    stack.push(n);
                } else {
                    boundary.push((u, v, n));
                }
            }
        }

        for &t in &cavity {
            self.alive[t] = false;
            self.free.push(t);
        }
        // Reuse slots in a fixed order.
        self.free.sort_unstable_by(|a, b| b.cmp(a));

        let mut created = Vec::with_capacity(boundary.len());
        for &(u, v, outside) in &boundary {
            let t = self.alloc([u, v, p]);
            self.adj[t][2] = outside;
            let otri = self.tris[outside];
            for j in 0..3 {
                if otri[(j + 1) % 3] == v && otri[(j + 2) % 3] == u {
                    self.adj[outside][j] = t;
                }
            }
            created.push(t);
        }
        for &t in &created {
            let [u, v, _] = self.tris[t];
            // Across (v, p): the new triangle starting at v.
            // Across (p, u): the new triangle ending at u.
            let next = *created.iter().find(|&&s| self.tris[s][0] == v).expect("closed cavity");
            let prev = *created.iter().find(|&&s| self.tris[s][1] == u).expect("closed cavity");
            self.adj[t][0] = next;
            self.adj[t][1] = prev;
        }
        self.last = *created
            .iter()
            .find(|&&t| !is_ghost(&self.tris[t]))
            .unwrap_or(&created[0]);
    }

    /// Live solid triangles and their solid neighbours (ghosts become `None`).
    pub(super) fn solid(&self) -> (Vec<[usize; 3]>, Vec<[Option<usize>; 3]>) {
        let mut remap = vec![usize::MAX; self.tris.len()];
        let mut tris = Vec::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if self.alive[t] && !is_ghost(tri) {
                remap[t] = tris.len();
                tris.push(*tri);
            }
        }
        let mut adj = Vec::with_capacity(tris.len());
        for (t, tri) in self.tris.iter().enumerate() {
            if self.alive[t] && !is_ghost(tri) {
                let a = self.adj[t];
                adj.push(a.map(|n| (remap[n] != usize::MAX).then_some(remap[n])));
            }
        }
        (tris, adj)
    }
}

/// Hilbert-curve key used to order insertions for short walks.
pub(super) fn hilbert_key(x: f64, y: f64, bounds: [f64; 4]) -> u64 {
    const ORDER: u32 = 16;
    let n = 1u64 << ORDER;
    let [xmin, ymin, xmax, ymax] = bounds;
    let scale = |v: f64, lo: f64, hi: f64| {
        let span = hi - lo;
        if span <= 0.0 {
            0
        } else {
            (((v - lo) / span) * (n - 1) as f64).round().clamp(0.0, (n - 1) as f64) as u64
        }
    };
    let (mut hx, mut hy) = (scale(x, xmin, xmax), scale(y, ymin, ymax));
    let mut d = 0u64;
    let mut s = n / 2;
    while s > 0 {
        let rx = u64::from(hx & s > 0);
        let ry = u64::from(hy & s > 0);
        d += s * s * ((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                hx = n - 1 - hx;
                hy = n - 1 - hy;
            }
            std::mem::swap(&mut hx, &mut hy);
        }
        s /= 2;
    }
    d
}
