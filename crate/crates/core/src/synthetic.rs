//! Analytic terrain fixtures and contour extraction, for tests and demos.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::vector_io::{Feature, GeoPoint, Geometry, LayerKind, PropertyValue, VectorLayer, DEFAULT_ELEVATION_PROPERTY};

/// Regular lattice of surface samples, origin at the south-west corner.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    pub origin: GeoPoint,
    pub spacing: f64,
    /// Lattice points per row and per column.
    pub nx: usize,
    pub ny: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EdgeKey {
    /// From lattice point (i, j) to (i + 1, j).
    Horizontal(usize, usize),
    /// From lattice point (i, j) to (i, j + 1).
    Vertical(usize, usize),
}

impl SampleGrid {
    pub fn new(f: impl Fn(f64, f64) -> f64, origin: GeoPoint, spacing: f64, nx: usize, ny: usize) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = (origin.x + i as f64 * spacing, origin.y + j as f64 * spacing);
                values.push(f(x, y));
            }
        }
        SampleGrid {
            origin,
            spacing,
            nx,
            ny,
            values,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    fn point(&self, i: usize, j: usize) -> GeoPoint {
        GeoPoint::new(self.origin.x + i as f64 * self.spacing, self.origin.y + j as f64 * self.spacing)
    }

    fn crossing(&self, key: EdgeKey, level: f64) -> GeoPoint {
        let ((i0, j0), (i1, j1)) = match key {
            EdgeKey::Horizontal(i, j) => ((i, j), (i + 1, j)),
            EdgeKey::Vertical(i, j) => ((i, j), (i, j + 1)),
        };
        let (f0, f1) = (self.at(i0, j0), self.at(i1, j1));
        let t = (level - f0) / (f1 - f0);
        let (a, b) = (self.point(i0, j0), self.point(i1, j1));
        GeoPoint::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
    }

    /// Marching squares at `level`, stitched into polylines. Closed loops
    /// repeat their first point at the end.
    pub fn contours(&self, level: f64) -> Vec<Vec<GeoPoint>> {
        let mut links: BTreeMap<EdgeKey, Vec<EdgeKey>> = BTreeMap::new();
        let mut link = |a: EdgeKey, b: EdgeKey| {
            links.entry(a).or_default().push(b);
            links.entry(b).or_default().push(a);
        };
        for j in 0..self.ny.saturating_sub(1) {
            for i in 0..self.nx.saturating_sub(1) {
                let corners = [self.at(i, j), self.at(i + 1, j), self.at(i + 1, j + 1), self.at(i, j + 1)];
                let above = corners.map(|v| v >= level);
                let bottom = EdgeKey::Horizontal(i, j);
                let right = EdgeKey::Vertical(i + 1, j);
                let top = EdgeKey::Horizontal(i, j + 1);
                let left = EdgeKey::Vertical(i, j);
                let edges = [(bottom, 0, 1), (right, 1, 2), (top, 2, 3), (left, 3, 0)];
                let cut: Vec<EdgeKey> = edges.iter().filter(|e| above[e.1] != above[e.2]).map(|e| e.0).collect();
                match cut.len() {
                    2 => link(cut[0], cut[1]),
                    4 => {
                        let center_above = corners.iter().sum::<f64>() / 4.0 >= level;
                        // Diagonal corners 0 and 2 connect through the center
                        // when its side agrees with theirs.
                        if above[0] == center_above {
                            link(bottom, right);
                            link(top, left);
                        } else {
                            link(left, bottom);
                            link(right, top);
                        }
                    }
                    _ => {}
                }
            }
        }

        let mut used: BTreeMap<EdgeKey, bool> = links.keys().map(|&k| (k, false)).collect();
        let mut lines = Vec::new();
        let starts: Vec<EdgeKey> = links
            .iter()
            .filter(|(_, n)| n.len() == 1)
            .map(|(&k, _)| k)
            .chain(links.keys().copied())
            .collect();
        for start in starts {
            if used[&start] {
                continue;
            }
            let mut keys = vec![start];
            used.insert(start, true);
            let mut current = start;
            while let Some(&next) = links[&current].iter().find(|k| !used[*k]) {
                used.insert(next, true);
                keys.push(next);
                current = next;
            }
            let closed = keys.len() > 2 && links[&current].contains(&start);
            let mut line: Vec<GeoPoint> = keys.iter().map(|&k| self.crossing(k, level)).collect();
            if closed {
                line.push(line[0]);
            }
            lines.push(line);
        }
        lines
    }

    /// One polyline feature per contour piece, tagged with its level.
    pub fn contour_layer(&self, levels: &[f64]) -> VectorLayer {
        let features = levels
            .iter()
            .flat_map(|&level| {
                self.contours(level).into_iter().filter(|l| l.len() >= 2).map(move |line| {
                    Feature::new(Geometry::Polyline(line.into_iter().map(round_mm).collect()))
                        .with_property(DEFAULT_ELEVATION_PROPERTY, PropertyValue::Number(level))
                })
            })
            .collect();
        VectorLayer::new(LayerKind::Contours, features)
    }
}

/// Rounds to whole millimetres so written fixtures stay compact.
pub fn round_mm(p: GeoPoint) -> GeoPoint {
    GeoPoint::new((p.x * 1000.0).round() / 1000.0, (p.y * 1000.0).round() / 1000.0)
}

fn spot_height(x: f64, y: f64, z: f64) -> Feature {
    Feature::new(Geometry::Point(GeoPoint::new(x, y))).with_property(DEFAULT_ELEVATION_PROPERTY, PropertyValue::Number(z))
}

fn square_ring(half: f64, spacing: f64) -> Vec<GeoPoint> {
    let per_side = (2.0 * half / spacing).round() as usize;
    let step = 2.0 * half / per_side as f64;
    let mut ring = Vec::with_capacity(4 * per_side + 1);
    let sides = [((-half, -half), (1.0, 0.0)), ((half, -half), (0.0, 1.0)), ((half, half), (-1.0, 0.0)), ((-half, half), (0.0, -1.0))];
    for ((x0, y0), (dx, dy)) in sides {
        for k in 0..per_side {
            let s = k as f64 * step;
            ring.push(GeoPoint::new(x0 + dx * s, y0 + dy * s));
        }
    }
    ring.push(ring[0]);
    ring
}

/// Two concentric square contours centered on the origin: the outer one at
/// 100 m with half-width `outer_half`, the inner one at 90 m.
pub fn concentric_square_rings(outer_half: f64, inner_half: f64, spacing: f64) -> VectorLayer {
    let feature = |half: f64, z: f64| {
        Feature::new(Geometry::Polyline(square_ring(half, spacing)))
            .with_property(DEFAULT_ELEVATION_PROPERTY, PropertyValue::Number(z))
    };
    VectorLayer::new(LayerKind::Contours, vec![feature(outer_half, 100.0), feature(inner_half, 90.0)])
}

/// A valley descending toward -y with U-shaped contours pointing upstream.
pub struct UValley {
    pub contours: VectorLayer,
    /// Valley axis from the upstream end to the downstream end.
    pub axis: Geometry,
}

/// Valley floor `z = 100 + 0.1 y + 0.004 x²` contoured every 2 m from 102
/// to 110 m, with vertices every 5 m offset from the axis. The contour arms
/// produce flat triangles along the valley sides.
pub fn u_valley() -> UValley {
    let features = [102.0, 104.0, 106.0, 108.0, 110.0]
        .into_iter()
        .map(|level| {
            let line: Vec<GeoPoint> = (-30..30)
                .map(|k| 2.5 + 5.0 * k as f64)
                .map(|x| GeoPoint::new(x, (level - 100.0 - 0.004 * x * x) / 0.1))
                .collect();
            Feature::new(Geometry::Polyline(line)).with_property(DEFAULT_ELEVATION_PROPERTY, PropertyValue::Number(level))
        })
        .collect();
    UValley {
        contours: VectorLayer::new(LayerKind::Contours, features),
        axis: Geometry::Polyline(vec![GeoPoint::new(0.0, 99.0), GeoPoint::new(0.0, 21.0)]),
    }
}

/// Synthetic site with three north-south interfluves, four nested enclosures
/// on the central one, a valley with a 1 m step and a rampart crossing it.
#[derive(Debug, Clone)]
pub struct IarcuriSite {
    pub contours: VectorLayer,
    pub spot_heights: VectorLayer,
    pub enclosures: VectorLayer,
    pub profile_lines: VectorLayer,
    /// Polygon bounding the candidate lake behind the rampart.
    pub lake_containment: VectorLayer,
    pub lake_seed: GeoPoint,
    pub bounds: [f64; 4],
}

pub const IARCURI_WIDTH: f64 = 1400.0;
pub const IARCURI_HEIGHT: f64 = 1000.0;
const ENCLOSURE_CENTER: (f64, f64) = (700.0, 500.0);
const ENCLOSURE_RADII: [f64; 4] = [70.0, 100.0, 141.0, 296.0];
const VALLEY_X: f64 = 925.0;
const RAMPART_Y: f64 = 420.0;

fn enclosure_shape(theta: f64) -> f64 {
    1.0 + 0.08 * (3.0 * theta).sin() + 0.05 * (2.0 * theta).cos()
}

fn gauss(d: f64, sigma: f64) -> f64 {
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Elevation of the Iarcuri-like site in meters.
pub fn iarcuri_surface(x: f64, y: f64) -> f64 {
    let ridges = 12.0 * gauss(x - 250.0, 110.0) + 18.0 * gauss(x - 700.0, 110.0) + 12.0 * gauss(x - 1150.0, 110.0);
    let channel = -4.0 * gauss(x - VALLEY_X, 30.0);
    let in_valley = gauss(x - VALLEY_X, 60.0);
    let step = -in_valley / (1.0 + ((y - RAMPART_Y) / 2.0).exp());
    let rampart = 2.0 * gauss(y - RAMPART_Y, 6.0) * gauss(x - VALLEY_X, 80.0);
    let (dx, dy) = (x - ENCLOSURE_CENTER.0, y - ENCLOSURE_CENTER.1);
    let rho = dx.hypot(dy) / enclosure_shape(dy.atan2(dx));
    let wave = 1.5 * gauss(rho - ENCLOSURE_RADII[2], 6.0);
    130.0 + 0.012 * y + ridges + channel + step + rampart + wave
}

fn ring_polygon(center: (f64, f64), radius: f64, vertices: usize) -> Geometry {
    let ring = (0..vertices)
        .map(|k| {
            let theta = TAU * k as f64 / vertices as f64;
            let r = radius * enclosure_shape(theta);
            round_mm(GeoPoint::new(center.0 + r * theta.cos(), center.1 + r * theta.sin()))
        })
        .collect();
    Geometry::polygon_from_ring(ring)
}

pub fn iarcuri_like() -> IarcuriSite {
    let spacing = 4.0;
    let nx = (IARCURI_WIDTH / spacing) as usize + 1;
    let ny = (IARCURI_HEIGHT / spacing) as usize + 1;
    let grid = SampleGrid::new(iarcuri_surface, GeoPoint::new(0.0, 0.0), spacing, nx, ny);
    let levels: Vec<f64> = (126..=170).map(f64::from).collect();
    let contours = grid.contour_layer(&levels);

    let mut spots = Vec::new();
    let z = |x: f64, y: f64| (iarcuri_surface(x, y) * 1000.0).round() / 1000.0;
    for k in 0..=28 {
        let x = 50.0 * k as f64;
        spots.push(spot_height(x, 0.0, z(x, 0.0)));
        spots.push(spot_height(x, IARCURI_HEIGHT, z(x, IARCURI_HEIGHT)));
    }
    for k in 1..20 {
        let y = 50.0 * k as f64;
        spots.push(spot_height(0.0, y, z(0.0, y)));
        spots.push(spot_height(IARCURI_WIDTH, y, z(IARCURI_WIDTH, y)));
    }
    for k in 1..100 {
        let y = 10.0 * k as f64;
        spots.push(spot_height(VALLEY_X, y, z(VALLEY_X, y)));
        for ridge in [250.0, 700.0, 1150.0] {
            if k % 5 == 0 {
                spots.push(spot_height(ridge, y, z(ridge, y)));
            }
        }
    }

    let enclosures = ENCLOSURE_RADII
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            Feature::new(ring_polygon(ENCLOSURE_CENTER, r, 72))
                .with_property("name", PropertyValue::Text(format!("enclosure_{}", i + 1)))
        })
        .collect();

    let line = |name: &str, a: (f64, f64), b: (f64, f64)| {
        Feature::new(Geometry::Polyline(vec![GeoPoint::new(a.0, a.1), GeoPoint::new(b.0, b.1)]))
            .with_property("name", PropertyValue::Text(name.to_string()))
    };
    let profile_lines = vec![
        line("valley_axis", (VALLEY_X, 980.0), (VALLEY_X, 20.0)),
        line("north_south", (700.0, 980.0), (700.0, 20.0)),
        line("west_east", (20.0, 500.0), (1380.0, 500.0)),
    ];

    let containment = Geometry::polygon_from_ring(vec![
        GeoPoint::new(VALLEY_X - 120.0, RAMPART_Y - 20.0),
        GeoPoint::new(VALLEY_X + 120.0, RAMPART_Y - 20.0),
        GeoPoint::new(VALLEY_X + 120.0, RAMPART_Y + 400.0),
        GeoPoint::new(VALLEY_X - 120.0, RAMPART_Y + 400.0),
    ]);

    IarcuriSite {
        contours,
        spot_heights: VectorLayer::new(LayerKind::SpotHeights, spots),
        enclosures: VectorLayer::new(LayerKind::Polygons, enclosures),
        profile_lines: VectorLayer::new(LayerKind::Polylines, profile_lines),
        lake_containment: VectorLayer::new(
            LayerKind::Polygons,
            vec![Feature::new(containment).with_property("name", PropertyValue::Text("behind_rampart".into()))],
        ),
        lake_seed: GeoPoint::new(VALLEY_X, RAMPART_Y + 30.0),
        bounds: [0.0, 0.0, IARCURI_WIDTH, IARCURI_HEIGHT],
    }
}
