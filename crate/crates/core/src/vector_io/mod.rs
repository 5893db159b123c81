//! Vector inputs: a GeoJSON subset (Point, LineString, Polygon) with
//! coordinates read as planar meters, plus CSV table output.

mod geojson;
mod table;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::tin::TinVertex;

pub use geojson::{load_vector_layer, load_vector_layer_with, parse_vector_layer, write_vector_layer, LoadOptions, CRS_NOTE};
pub use table::{csv_table_string, read_csv_table, write_csv_table, CsvRecord, CsvValue, CSV_DECIMALS};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureProblem {
    UnsupportedGeometry(String),
    KindMismatch { expected: LayerKind, found: GeometryKind },
    MalformedGeometry(String),
    NonFiniteCoordinate,
    TooFewVertices { needed: usize, found: usize },
    UnclosedRing,
    SelfIntersectingRing,
    MissingElevation(String),
    NonFiniteElevation,
}

impl fmt::Display for FeatureProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureProblem::UnsupportedGeometry(t) => write!(f, "unsupported geometry type '{t}'"),
            FeatureProblem::KindMismatch { expected, found } => {
                write!(f, "kind mismatch: layer expects {expected}, feature is a {found}")
            }
            FeatureProblem::MalformedGeometry(m) => write!(f, "malformed geometry: {m}"),
            FeatureProblem::NonFiniteCoordinate => write!(f, "non-finite coordinate"),
            FeatureProblem::TooFewVertices { needed, found } => {
                write!(f, "needs at least {needed} distinct vertices, has {found}")
            }
            FeatureProblem::UnclosedRing => write!(f, "polygon ring is not closed"),
            FeatureProblem::SelfIntersectingRing => write!(f, "polygon ring intersects itself"),
            FeatureProblem::MissingElevation(name) => write!(f, "missing numeric '{name}' property"),
            FeatureProblem::NonFiniteElevation => write!(f, "elevation is not finite"),
        }
    }
}

/// A rejected feature and the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDiagnostic {
    pub index: usize,
    pub problem: FeatureProblem,
}

impl fmt::Display for FeatureDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "feature {}: {}", self.index, self.problem)
    }
}

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{} of {total} features rejected; first: {}", .diagnostics.len(), .diagnostics[0])]
    Rejected {
        total: usize,
        diagnostics: Vec<FeatureDiagnostic>,
    },
    #[error("layer kind {0} cannot be validated as contours")]
    NotElevationLayer(LayerKind),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl VectorError {
    pub fn diagnostics(&self) -> &[FeatureDiagnostic] {
        match self {
            VectorError::Rejected { diagnostics, .. } => diagnostics,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
}

impl GeoPoint {
    pub fn new(x: f64, y: f64) -> Self {
        GeoPoint { x, y }
    }

    pub fn distance(&self, other: &GeoPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    Point,
    Polyline,
    Polygon,
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeometryKind::Point => "point",
            GeometryKind::Polyline => "polyline",
            GeometryKind::Polygon => "polygon",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(GeoPoint),
    Polyline(Vec<GeoPoint>),
    /// Outer ring first, then holes. Rings are explicitly closed.
    Polygon(Vec<Vec<GeoPoint>>),
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point(_) => GeometryKind::Point,
            Geometry::Polyline(_) => GeometryKind::Polyline,
            Geometry::Polygon(_) => GeometryKind::Polygon,
        }
    }

    /// Ordered vertex lists: one for points and polylines, one per ring.
    pub fn paths(&self) -> Vec<&[GeoPoint]> {
        match self {
            Geometry::Point(p) => vec![std::slice::from_ref(p)],
            Geometry::Polyline(v) => vec![v.as_slice()],
            Geometry::Polygon(rings) => rings.iter().map(Vec::as_slice).collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.paths().iter().map(|p| p.len()).sum()
    }

    /// Builds a closed single-ring polygon, closing it if needed.
    pub fn polygon_from_ring(mut ring: Vec<GeoPoint>) -> Geometry {
        if ring.first() != ring.last() {
            if let Some(&first) = ring.first() {
                ring.push(first);
            }
        }
        Geometry::Polygon(vec![ring])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropertyValue {
    Number(f64),
    Text(String),
}

impl PropertyValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            PropertyValue::Number(v) => Some(*v),
            PropertyValue::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            PropertyValue::Text(s) => Some(s),
            PropertyValue::Number(_) => None,
        }
    }
}

pub type Properties = BTreeMap<String, PropertyValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub geometry: Geometry,
    pub properties: Properties,
}

impl Feature {
    pub fn new(geometry: Geometry) -> Self {
        Feature {
            geometry,
            properties: Properties::new(),
        }
    }

    pub fn with_property(mut self, key: &str, value: PropertyValue) -> Self {
        self.properties.insert(key.to_string(), value);
        self
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.properties.get(key).and_then(PropertyValue::as_f64)
    }

    pub fn name(&self) -> Option<&str> {
        self.properties.get("name").and_then(PropertyValue::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Contours,
    SpotHeights,
    Polygons,
    Polylines,
}

impl LayerKind {
    pub fn geometry_kind(&self) -> GeometryKind {
        match self {
            LayerKind::Contours | LayerKind::Polylines => GeometryKind::Polyline,
            LayerKind::SpotHeights => GeometryKind::Point,
            LayerKind::Polygons => GeometryKind::Polygon,
        }
    }

    pub fn needs_elevation(&self) -> bool {
        matches!(self, LayerKind::Contours | LayerKind::SpotHeights)
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerKind::Contours => "contours",
            LayerKind::SpotHeights => "spot_heights",
            LayerKind::Polygons => "polygons",
            LayerKind::Polylines => "polylines",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorLayer {
    pub kind: LayerKind,
    pub features: Vec<Feature>,
    /// Name of the numeric elevation property for contour-type layers.
    pub elevation_property: String,
}

impl VectorLayer {
    pub fn new(kind: LayerKind, features: Vec<Feature>) -> Self {
        VectorLayer {
            kind,
            features,
            elevation_property: DEFAULT_ELEVATION_PROPERTY.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

pub const DEFAULT_ELEVATION_PROPERTY: &str = "elevation";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSummary {
    pub features: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub vertices: usize,
}

/// Elevation-tagged vertices ready for triangulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSet {
    pub vertices: Vec<TinVertex>,
    pub summary: ContourSummary,
}

impl ContourSet {
    /// Concatenates several sets, e.g. contours and spot heights.
    pub fn merge(sets: &[ContourSet]) -> Option<ContourSet> {
        let mut iter = sets.iter();
        let first = iter.next()?.clone();
        Some(iter.fold(first, |mut acc, s| {
            acc.vertices.extend_from_slice(&s.vertices);
            acc.summary.features += s.summary.features;
            acc.summary.vertices += s.summary.vertices;
            acc.summary.z_min = acc.summary.z_min.min(s.summary.z_min);
            acc.summary.z_max = acc.summary.z_max.max(s.summary.z_max);
            acc
        }))
    }
}

/// Drops consecutive duplicate vertices.
pub fn dedup_consecutive(path: &[GeoPoint]) -> Vec<GeoPoint> {
    let mut out: Vec<GeoPoint> = Vec::with_capacity(path.len());
    for p in path {
        if out.last() != Some(p) {
            out.push(*p);
        }
    }
    out
}

/// Tags every vertex with its feature's elevation and drops consecutive
/// duplicates.
pub fn validate_contours(layer: &VectorLayer) -> Result<ContourSet, VectorError> {
    if !layer.kind.needs_elevation() {
        return Err(VectorError::NotElevationLayer(layer.kind));
    }
    let mut diagnostics = Vec::new();
    let mut vertices = Vec::new();
    let mut z_min = f64::INFINITY;
    let mut z_max = f64::NEG_INFINITY;
    for (index, feature) in layer.features.iter().enumerate() {
        let Some(z) = feature.number(&layer.elevation_property) else {
            diagnostics.push(FeatureDiagnostic {
                index,
                problem: FeatureProblem::MissingElevation(layer.elevation_property.clone()),
            });
            continue;
        };
        if !z.is_finite() {
            diagnostics.push(FeatureDiagnostic {
                index,
                problem: FeatureProblem::NonFiniteElevation,
            });
            continue;
        }
        let path = match &feature.geometry {
            Geometry::Point(p) => vec![*p],
            Geometry::Polyline(path) => {
                let path = dedup_consecutive(path);
                if path.len() < 2 {
                    diagnostics.push(FeatureDiagnostic {
                        index,
                        problem: FeatureProblem::TooFewVertices {
                            needed: 2,
                            found: path.len(),
                        },
                    });
                    continue;
                }
                path
            }
            Geometry::Polygon(_) => {
                diagnostics.push(FeatureDiagnostic {
                    index,
                    problem: FeatureProblem::KindMismatch {
                        expected: layer.kind,
                        found: GeometryKind::Polygon,
                    },
                });
                continue;
            }
        };
        z_min = z_min.min(z);
        z_max = z_max.max(z);
        vertices.extend(path.iter().map(|p| TinVertex::new(p.x, p.y, z)));
    }
    if !diagnostics.is_empty() {
        return Err(VectorError::Rejected {
            total: layer.features.len(),
            diagnostics,
        });
    }
    Ok(ContourSet {
        summary: ContourSummary {
            features: layer.features.len(),
            z_min,
            z_max,
            vertices: vertices.len(),
        },
        vertices,
    })
}

/// Segment intersection test used for ring validation (touching counts).
pub(crate) fn segments_intersect(a: GeoPoint, b: GeoPoint, c: GeoPoint, d: GeoPoint) -> bool {
    use crate::tin::orient;
    let o = |p: GeoPoint, q: GeoPoint, r: GeoPoint| orient([p.x, p.y], [q.x, q.y], [r.x, r.y]);
    let on_segment = |p: GeoPoint, q: GeoPoint, r: GeoPoint| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let (d1, d2, d3, d4) = (o(c, d, a), o(c, d, b), o(a, b, c), o(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Closed ring (first == last) without self-intersections between
/// non-adjacent edges.
pub fn ring_is_simple(ring: &[GeoPoint]) -> bool {
    let n = ring.len().saturating_sub(1);
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Adjacent edges may only share their common vertex; folding
                // back onto the previous edge is an overlap.
                let (prev, shared, next) = if j == i + 1 {
                    (ring[i], ring[i + 1], ring[j + 1])
                } else {
                    (ring[j], ring[0], ring[1])
                };
                let o = crate::tin::orient([prev.x, prev.y], [shared.x, shared.y], [next.x, next.y]);
                let back = (prev.x - shared.x) * (next.x - shared.x) + (prev.y - shared.y) * (next.y - shared.y);
                if o == 0.0 && back > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return false;
            }
        }
    }
    true
}
