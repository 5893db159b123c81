use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{
    dedup_consecutive, ring_is_simple, Feature, FeatureDiagnostic, FeatureProblem, GeoPoint, Geometry, LayerKind,
    Properties, PropertyValue, VectorError, VectorLayer, DEFAULT_ELEVATION_PROPERTY,
};

/// Written as a top-level member of every FeatureCollection we emit.
pub const CRS_NOTE: &str = "coordinates are planar meters (easting, northing), not longitude/latitude";

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub elevation_property: String,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            elevation_property: DEFAULT_ELEVATION_PROPERTY.to_string(),
        }
    }
}

pub fn load_vector_layer(path: impl AsRef<Path>, expected: LayerKind) -> Result<VectorLayer, VectorError> {
    load_vector_layer_with(path, expected, &LoadOptions::default())
}

pub fn load_vector_layer_with(
    path: impl AsRef<Path>,
    expected: LayerKind,
    options: &LoadOptions,
) -> Result<VectorLayer, VectorError> {
    let text = fs::read_to_string(path)?;
    parse_vector_layer(&text, expected, options)
}

/// Parses a FeatureCollection. Every feature is either accepted or
/// reported; any rejection fails the whole layer with all diagnostics.
pub fn parse_vector_layer(text: &str, expected: LayerKind, options: &LoadOptions) -> Result<VectorLayer, VectorError> {
    let root: Value = serde_json::from_str(text).map_err(|e| VectorError::Parse(e.to_string()))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(VectorError::Parse("root is not a FeatureCollection".into()));
    }
    let raw = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| VectorError::Parse("missing 'features' array".into()))?;

    let mut features = Vec::with_capacity(raw.len());
    let mut diagnostics = Vec::new();
    for (index, value) in raw.iter().enumerate() {
        match parse_feature(value, expected, options) {
            Ok(f) => features.push(f),
            Err(problem) => diagnostics.push(FeatureDiagnostic { index, problem }),
        }
    }
    debug_assert_eq!(features.len() + diagnostics.len(), raw.len());
    if !diagnostics.is_empty() {
        return Err(VectorError::Rejected {
            total: raw.len(),
            diagnostics,
        });
    }
    Ok(VectorLayer {
        kind: expected,
        features,
        elevation_property: options.elevation_property.clone(),
    })
}

fn parse_feature(value: &Value, expected: LayerKind, options: &LoadOptions) -> Result<Feature, FeatureProblem> {
    let malformed = |m: &str| FeatureProblem::MalformedGeometry(m.to_string());
    if value.get("type").and_then(Value::as_str) != Some("Feature") {
        return Err(malformed("not a Feature object"));
    }
    let geometry = value.get("geometry").ok_or_else(|| malformed("missing geometry"))?;
    let geometry = parse_geometry(geometry)?;
    if geometry.kind() != expected.geometry_kind() {
        return Err(FeatureProblem::KindMismatch {
            expected,
            found: geometry.kind(),
        });
    }
    check_geometry(&geometry)?;
    let properties = match value.get("properties") {
        None | Some(Value::Null) => Properties::new(),
        Some(Value::Object(map)) => parse_properties(map),
        Some(_) => return Err(malformed("properties is not an object")),
    };
    let feature = Feature { geometry, properties };
    if expected.needs_elevation() {
        match feature.number(&options.elevation_property) {
            None => return Err(FeatureProblem::MissingElevation(options.elevation_property.clone())),
            Some(z) if !z.is_finite() => return Err(FeatureProblem::NonFiniteElevation),
            Some(_) => {}
        }
    }
    Ok(feature)
}

fn parse_properties(map: &Map<String, Value>) -> Properties {
    map.iter()
        .filter_map(|(k, v)| {
            let value = match v {
                Value::Null => return None,
                Value::Number(n) => PropertyValue::Number(n.as_f64()?),
                Value::String(s) => PropertyValue::Text(s.clone()),
                other => PropertyValue::Text(other.to_string()),
            };
            Some((k.clone(), value))
        })
        .collect()
}

fn parse_position(value: &Value) -> Result<GeoPoint, FeatureProblem> {
    let arr = value
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| FeatureProblem::MalformedGeometry("position must be [x, y]".into()))?;
    let x = arr[0].as_f64();
    let y = arr[1].as_f64();
    match (x, y) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok(GeoPoint::new(x, y)),
        (Some(_), Some(_)) => Err(FeatureProblem::NonFiniteCoordinate),
        _ => Err(FeatureProblem::MalformedGeometry("coordinates must be numbers".into())),
    }
}

fn parse_path(value: &Value) -> Result<Vec<GeoPoint>, FeatureProblem> {
    value
        .as_array()
        .ok_or_else(|| FeatureProblem::MalformedGeometry("expected an array of positions".into()))?
        .iter()
        .map(parse_position)
        .collect()
}

fn parse_geometry(value: &Value) -> Result<Geometry, FeatureProblem> {
    let kind = value
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| FeatureProblem::MalformedGeometry("geometry has no type".into()))?;
    let coords = value
        .get("coordinates")
        .ok_or_else(|| FeatureProblem::MalformedGeometry("geometry has no coordinates".into()))?;
    match kind {
        "Point" => Ok(Geometry::Point(parse_position(coords)?)),
        "LineString" => Ok(Geometry::Polyline(parse_path(coords)?)),
        "Polygon" => {
            let rings = coords
                .as_array()
                .ok_or_else(|| FeatureProblem::MalformedGeometry("polygon needs an array of rings".into()))?
                .iter()
                .map(parse_path)
                .collect::<Result<Vec<_>, _>>()?;
            if rings.is_empty() {
                return Err(FeatureProblem::MalformedGeometry("polygon has no rings".into()));
            }
            Ok(Geometry::Polygon(rings))
        }
        other => Err(FeatureProblem::UnsupportedGeometry(other.to_string())),
    }
}

fn check_geometry(geometry: &Geometry) -> Result<(), FeatureProblem> {
    match geometry {
        Geometry::Point(_) => Ok(()),
        Geometry::Polyline(path) => {
            let distinct = dedup_consecutive(path).len();
            if distinct < 2 {
                return Err(FeatureProblem::TooFewVertices { needed: 2, found: distinct });
            }
            Ok(())
        }
        Geometry::Polygon(rings) => {
            for ring in rings {
                if ring.first() != ring.last() || ring.len() < 2 {
                    return Err(FeatureProblem::UnclosedRing);
                }
                let open = dedup_consecutive(&ring[..ring.len() - 1]);
                let mut distinct = open.clone();
                distinct.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
                distinct.dedup();
                if distinct.len() < 3 {
                    return Err(FeatureProblem::TooFewVertices {
                        needed: 3,
                        found: distinct.len(),
                    });
                }
                if !ring_is_simple(&dedup_consecutive(ring)) {
                    return Err(FeatureProblem::SelfIntersectingRing);
                }
            }
            Ok(())
        }
    }
}

fn geometry_json(geometry: &Geometry) -> Value {
    let pos = |p: &GeoPoint| json!([p.x, p.y]);
    match geometry {
        Geometry::Point(p) => json!({"type": "Point", "coordinates": pos(p)}),
        Geometry::Polyline(path) => json!({
            "type": "LineString",
            "coordinates": path.iter().map(pos).collect::<Vec<_>>(),
        }),
        Geometry::Polygon(rings) => json!({
            "type": "Polygon",
            "coordinates": rings
                .iter()
                .map(|r| r.iter().map(pos).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
    }
}

pub fn layer_to_json(layer: &VectorLayer) -> Value {
    let features: Vec<Value> = layer
        .features
        .iter()
        .map(|f| {
            let props: Map<String, Value> = f
                .properties
                .iter()
                .map(|(k, v)| {
                    let v = match v {
                        PropertyValue::Number(n) => json!(n),
                        PropertyValue::Text(s) => json!(s),
                    };
                    (k.clone(), v)
                })
                .collect();
            json!({"type": "Feature", "geometry": geometry_json(&f.geometry), "properties": props})
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "crs_note": CRS_NOTE,
        "features": features,
    })
}

/// Writes the layer as GeoJSON. Coordinates use the shortest decimal form
/// that parses back to the same `f64`.
pub fn write_vector_layer(layer: &VectorLayer, path: impl AsRef<Path>) -> Result<(), VectorError> {
    let text = serde_json::to_string_pretty(&layer_to_json(layer)).map_err(|e| VectorError::Parse(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_CONTOUR: &str = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[5,1],[10,0]]},
         "properties":{"elevation":140.0}}]}"#;

    #[test]
    fn minimal_contour_layer() {
        let layer = parse_vector_layer(ONE_CONTOUR, LayerKind::Contours, &LoadOptions::default()).unwrap();
        assert_eq!(layer.len(), 1);
        assert_eq!(layer.features[0].number("elevation"), Some(140.0));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let err = parse_vector_layer(ONE_CONTOUR, LayerKind::Polygons, &LoadOptions::default()).unwrap_err();
        assert!(matches!(
            err.diagnostics()[0].problem,
            FeatureProblem::KindMismatch {
                expected: LayerKind::Polygons,
                ..
            }
        ));
    }

    #[test]
    fn custom_elevation_property() {
        let text = ONE_CONTOUR.replace("elevation", "ELEV");
        assert!(parse_vector_layer(&text, LayerKind::Contours, &LoadOptions::default()).is_err());
        let opts = LoadOptions {
            elevation_property: "ELEV".into(),
        };
        let layer = parse_vector_layer(&text, LayerKind::Contours, &opts).unwrap();
        assert_eq!(layer.features[0].number("ELEV"), Some(140.0));
    }

    #[test]
    fn malformed_inputs() {
        let opts = LoadOptions::default();
        assert!(matches!(parse_vector_layer("{", LayerKind::Contours, &opts), Err(VectorError::Parse(_))));
        assert!(matches!(
            parse_vector_layer(r#"{"type":"Feature"}"#, LayerKind::Contours, &opts),
            Err(VectorError::Parse(_))
        ));
        let multi = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"MultiPoint","coordinates":[[0,0]]},"properties":{}}]}"#;
        let err = parse_vector_layer(multi, LayerKind::SpotHeights, &opts).unwrap_err();
        assert!(matches!(err.diagnostics()[0].problem, FeatureProblem::UnsupportedGeometry(_)));
    }

    #[test]
    fn polygon_rules() {
        let opts = LoadOptions::default();
        let poly = |coords: &str| {
            format!(
                r#"{{"type":"FeatureCollection","features":[{{"type":"Feature","geometry":{{"type":"Polygon","coordinates":[{coords}]}},"properties":{{"name":"a"}}}}]}}"#
            )
        };
        assert!(parse_vector_layer(&poly("[[0,0],[4,0],[4,4],[0,4],[0,0]]"), LayerKind::Polygons, &opts).is_ok());
        let open = parse_vector_layer(&poly("[[0,0],[4,0],[4,4],[0,4]]"), LayerKind::Polygons, &opts).unwrap_err();
        assert_eq!(open.diagnostics()[0].problem, FeatureProblem::UnclosedRing);
        let bowtie = parse_vector_layer(&poly("[[0,0],[4,4],[4,0],[0,4],[0,0]]"), LayerKind::Polygons, &opts).unwrap_err();
        assert_eq!(bowtie.diagnostics()[0].problem, FeatureProblem::SelfIntersectingRing);
        let thin = parse_vector_layer(&poly("[[0,0],[4,0],[0,0]]"), LayerKind::Polygons, &opts).unwrap_err();
        assert!(matches!(thin.diagnostics()[0].problem, FeatureProblem::TooFewVertices { needed: 3, .. }));
    }

    #[test]
    fn diagnostics_cover_every_rejected_feature() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[1,0]]},"properties":{"elevation":1}},
            {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[0,0]]},"properties":{"elevation":1}},
            {"type":"Feature","geometry":{"type":"Point","coordinates":[0,0]},"properties":{"elevation":1}},
            {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[1,0]]},"properties":{}}]}"#;
        let err = parse_vector_layer(text, LayerKind::Contours, &LoadOptions::default()).unwrap_err();
        match err {
            VectorError::Rejected { total, diagnostics } => {
                assert_eq!(total, 4);
                assert_eq!(diagnostics.iter().map(|d| d.index).collect::<Vec<_>>(), vec![1, 2, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
