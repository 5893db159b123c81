//! Per-zone morphometry over polygon masks, plus histograms.

mod shape;

use thiserror::Error;

use crate::numeric::{CompensatedSum, Moments};
use crate::parallel::Executor;
use crate::raster::{GridSpec, Raster, RasterError};
use crate::vector_io::{csv_table_string, CsvRecord, CsvValue, GeoPoint, Geometry, VectorError, VectorLayer};

pub use shape::{convex_hull, diameter, min_area_rect_width, path_length, signed_area};

/// Zone label used for the whole-raster row of a zonal table.
pub const ENTIRE_AREA: &str = "entire_area";

#[derive(Debug, Error)]
pub enum ZonalError {
    #[error("zone geometry must be a polygon")]
    NotPolygon,
    #[error("polygon has zero area")]
    DegeneratePolygon,
    #[error("zone '{0}' has no valid cells")]
    EmptyZone(String),
    #[error("breaks must be at least two strictly ascending finite values")]
    BadBreaks,
    #[error("no zones given")]
    NoZones,
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// Per-cell zone membership on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMask {
    spec: GridSpec,
    membership: Vec<Option<u32>>,
}

impl ZoneMask {
    pub fn empty(spec: GridSpec) -> Self {
        ZoneMask {
            membership: vec![None; spec.len()],
            spec,
        }
    }

    /// Every cell assigned to `zone`.
    pub fn full(spec: GridSpec, zone: u32) -> Self {
        ZoneMask {
            membership: vec![Some(zone); spec.len()],
            spec,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn membership(&self) -> &[Option<u32>] {
        &self.membership
    }

    pub fn zone_at(&self, row: usize, col: usize) -> Option<u32> {
        self.membership[self.spec.index(row, col)]
    }

    pub fn set(&mut self, index: usize, zone: Option<u32>) {
        self.membership[index] = zone;
    }

    /// Indices of cells carrying any zone, in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.membership.iter().enumerate().filter(|(_, z)| z.is_some()).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.membership.iter().filter(|z| z.is_some()).count()
    }

    /// Cells of `other` are copied over wherever they are set.
    pub fn overlay(&mut self, other: &ZoneMask) -> Result<(), ZonalError> {
        if !self.spec.same_grid(&other.spec) {
            return Err(RasterError::SpecMismatch.into());
        }
        for (dst, src) in self.membership.iter_mut().zip(&other.membership) {
            if src.is_some() {
                *dst = *src;
            }
        }
        Ok(())
    }
}

/// Even-odd crossing test against every ring of a polygon.
///
/// A horizontal ray is cast east from the point; edges with exactly one
/// endpoint strictly above the point are counted when they cross to the
/// east. This fixes the outcome for points that sit on an edge or vertex.
pub fn point_in_polygon(rings: &[Vec<GeoPoint>], x: f64, y: f64) -> bool {
    let mut inside = false;
    for ring in rings {
        for w in ring.windows(2) {
            if let Some(xi) = crossing_x(w[0], w[1], y) {
                if x < xi {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn crossing_x(a: GeoPoint, b: GeoPoint, y: f64) -> Option<f64> {
    ((a.y > y) != (b.y > y)).then(|| (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x)
}

fn polygon_rings(polygon: &Geometry) -> Result<&[Vec<GeoPoint>], ZonalError> {
    match polygon {
        Geometry::Polygon(rings) if !rings.is_empty() => Ok(rings),
        _ => Err(ZonalError::NotPolygon),
    }
}

/// Marks the cells whose center falls inside `polygon`.
///
/// Scanline over cell-center rows; membership matches [`point_in_polygon`]
/// at every center.
pub fn rasterize_polygon(polygon: &Geometry, spec: &GridSpec, zone: u32) -> Result<ZoneMask, ZonalError> {
    let rings = polygon_rings(polygon)?;
    if signed_area(&rings[0]) == 0.0 {
        return Err(ZonalError::DegeneratePolygon);
    }
    let mut mask = ZoneMask::empty(*spec);
    let mut crossings = Vec::new();
    for row in 0..spec.nrows {
        let (_, y) = spec.cell_center(row, 0);
        crossings.clear();
        for ring in rings {
            crossings.extend(ring.windows(2).filter_map(|w| crossing_x(w[0], w[1], y)));
        }
        if crossings.is_empty() {
            continue;
        }
        crossings.sort_by(f64::total_cmp);
        for col in 0..spec.ncols {
            let (x, _) = spec.cell_center(row, col);
            let east = crossings.len() - crossings.partition_point(|&xi| xi <= x);
            if east % 2 == 1 {
                mask.membership[spec.index(row, col)] = Some(zone);
            }
        }
    }
    Ok(mask)
}

/// Rectangle covering the full grid extent.
pub fn grid_extent_polygon(spec: &GridSpec) -> Geometry {
    let (l, b, r, t) = (spec.xll, spec.yll, spec.right(), spec.top());
    Geometry::polygon_from_ring(vec![
        GeoPoint::new(l, b),
        GeoPoint::new(r, b),
        GeoPoint::new(r, t),
        GeoPoint::new(l, t),
    ])
}

/// Rasters analysed together; all must share one grid.
#[derive(Debug, Clone, Copy)]
pub struct ZonalInputs<'a> {
    pub dem: &'a Raster,
    pub slope: &'a Raster,
    pub aspect: &'a Raster,
}

impl ZonalInputs<'_> {
    fn check(&self, spec: &GridSpec) -> Result<(), ZonalError> {
        for r in [self.dem, self.slope, self.aspect] {
            if !r.spec().same_grid(spec) {
                return Err(RasterError::SpecMismatch.into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZonalStats {
    pub zone: String,
    pub area_m2: f64,
    pub area_ha: f64,
    pub area_km2: f64,
    pub perimeter_km: f64,
    pub long_axis_km: f64,
    pub short_axis_km: f64,
    pub alt_min: f64,
    pub alt_max: f64,
    pub alt_mean: f64,
    pub alt_amplitude: f64,
    pub alt_stddev: f64,
    /// `None` when no masked cell has a slope value.
    pub slope: Option<Moments>,
    /// `None` when every masked aspect cell is flat or nodata.
    pub aspect_mean_circular: Option<f64>,
    pub cell_count: usize,
}

/// Circular mean of azimuths in degrees, in `[0, 360)`.
pub fn circular_mean_deg(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut s = CompensatedSum::new();
    let mut c = CompensatedSum::new();
    for v in values {
        let r = v.to_radians();
        s.add(r.sin());
        c.add(r.cos());
    }
    let (s, c) = (s.total(), c.total());
    if s == 0.0 && c == 0.0 {
        return None;
    }
    let deg = s.atan2(c).to_degrees().rem_euclid(360.0);
    Some(if deg >= 360.0 { 0.0 } else { deg })
}

/// Statistics of one zone of `mask`; `polygon` supplies perimeter and axes.
pub fn zonal_stats(
    inputs: ZonalInputs<'_>,
    mask: &ZoneMask,
    zone: u32,
    polygon: &Geometry,
    name: &str,
) -> Result<ZonalStats, ZonalError> {
    inputs.check(mask.spec())?;
    let rings = polygon_rings(polygon)?;
    let members = || mask.membership.iter().enumerate().filter(move |(_, z)| **z == Some(zone)).map(|(i, _)| i);
    let collect = |r: &Raster| -> Vec<f64> {
        members().map(|i| r.values()[i]).filter(|&v| !r.is_nodata(v)).collect()
    };

    let alt = Moments::from_slice(&collect(inputs.dem)).ok_or_else(|| ZonalError::EmptyZone(name.to_string()))?;
    let slope = Moments::from_slice(&collect(inputs.slope));
    let aspect_mean_circular =
        circular_mean_deg(collect(inputs.aspect).into_iter().filter(|&a| a != crate::morphometry::FLAT_ASPECT));

    let cs = mask.spec().cellsize;
    let area_m2 = alt.count as f64 * cs * cs;
    let area_km2 = area_m2 / 1e6;
    let outer = &rings[0];
    Ok(ZonalStats {
        zone: name.to_string(),
        area_m2,
        area_ha: 100.0 * area_km2,
        area_km2,
        perimeter_km: rings.iter().map(|r| path_length(r)).sum::<f64>() / 1000.0,
        long_axis_km: diameter(outer) / 1000.0,
        short_axis_km: min_area_rect_width(outer) / 1000.0,
        alt_min: alt.min,
        alt_max: alt.max,
        alt_mean: alt.mean,
        alt_amplitude: alt.max - alt.min,
        alt_stddev: alt.stddev,
        slope,
        aspect_mean_circular,
        cell_count: alt.count,
    })
}

impl CsvRecord for ZonalStats {
    fn header() -> Vec<&'static str> {
        vec![
            "zone",
            "area_km2",
            "area_ha",
            "perimeter_km",
            "long_axis_km",
            "short_axis_km",
            "alt_min_m",
            "alt_max_m",
            "alt_mean_m",
            "alt_amplitude_m",
            "alt_stddev",
            "slope_min_deg",
            "slope_max_deg",
            "slope_mean_deg",
            "slope_stddev",
            "aspect_mean_deg",
            "cell_count",
        ]
    }

    fn values(&self) -> Vec<CsvValue> {
        let s = self.slope;
        vec![
            self.zone.as_str().into(),
            self.area_km2.into(),
            self.area_ha.into(),
            self.perimeter_km.into(),
            self.long_axis_km.into(),
            self.short_axis_km.into(),
            self.alt_min.into(),
            self.alt_max.into(),
            self.alt_mean.into(),
            self.alt_amplitude.into(),
            self.alt_stddev.into(),
            s.map(|m| m.min).into(),
            s.map(|m| m.max).into(),
            s.map(|m| m.mean).into(),
            s.map(|m| m.stddev).into(),
            self.aspect_mean_circular.into(),
            self.cell_count.into(),
        ]
    }
}

fn zone_name(layer: &VectorLayer, i: usize) -> String {
    layer.features[i].name().map_or_else(|| format!("zone_{}", i + 1), str::to_string)
}

/// One row per polygon in input order, then the whole-raster row.
pub fn zonal_table(inputs: ZonalInputs<'_>, polygons: &VectorLayer, exec: &Executor) -> Result<Vec<ZonalStats>, ZonalError> {
    if polygons.is_empty() {
        return Err(ZonalError::NoZones);
    }
    let spec = *inputs.dem.spec();
    inputs.check(&spec)?;
    let indices: Vec<usize> = (0..polygons.len()).collect();
    let mut rows = exec
        .map(&indices, |&i| {
            let geometry = &polygons.features[i].geometry;
            let mask = rasterize_polygon(geometry, &spec, 1)?;
            zonal_stats(inputs, &mask, 1, geometry, &zone_name(polygons, i))
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    rows.push(zonal_stats(inputs, &ZoneMask::full(spec, 0), 0, &grid_extent_polygon(&spec), ENTIRE_AREA)?);
    Ok(rows)
}

pub fn zonal_table_csv(rows: &[ZonalStats]) -> Result<String, ZonalError> {
    Ok(csv_table_string(rows)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub breaks: Vec<f64>,
    /// `counts[i]` covers `[breaks[i], breaks[i + 1])`.
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// `bins` equal-width bins spanning `[min, max]`; the top edge is nudged up
/// so `max` itself is not overflow.
pub fn uniform_breaks(min: f64, max: f64, bins: usize) -> Result<Vec<f64>, ZonalError> {
    if bins == 0 || !(min.is_finite() && max.is_finite()) || max < min {
        return Err(ZonalError::BadBreaks);
    }
    let hi = if max > min { max } else { min + 1.0 };
    let width = (hi - min) / bins as f64;
    let mut breaks: Vec<f64> = (0..bins).map(|i| min + i as f64 * width).collect();
    breaks.push(hi.next_up());
    Ok(breaks)
}

/// Counts valid cells (optionally only those in `mask`) into half-open bins.
pub fn histogram(raster: &Raster, mask: Option<&ZoneMask>, breaks: &[f64]) -> Result<Histogram, ZonalError> {
    if breaks.len() < 2 || breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ZonalError::BadBreaks);
    }
    if let Some(m) = mask {
        if !m.spec().same_grid(raster.spec()) {
            return Err(RasterError::SpecMismatch.into());
        }
    }
    let mut h = Histogram {
        breaks: breaks.to_vec(),
        counts: vec![0; breaks.len() - 1],
        underflow: 0,
        overflow: 0,
    };
    let last = breaks[breaks.len() - 1];
    for (i, &v) in raster.values().iter().enumerate() {
        if raster.is_nodata(v) || mask.is_some_and(|m| m.membership[i].is_none()) {
            continue;
        }
        if v < breaks[0] {
            h.underflow += 1;
        } else if v >= last {
            h.overflow += 1;
        } else {
            h.counts[breaks.partition_point(|&b| b <= v) - 1] += 1;
        }
    }
    Ok(h)
}

/// One histogram CSV row; under- and overflow rows leave the open bound empty.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub bin_low: Option<f64>,
    pub bin_high: Option<f64>,
    pub count: u64,
}

impl CsvRecord for HistogramRow {
    fn header() -> Vec<&'static str> {
        vec!["bin_low", "bin_high", "count"]
    }

    fn values(&self) -> Vec<CsvValue> {
        vec![self.bin_low.into(), self.bin_high.into(), CsvValue::Integer(self.count as i64)]
    }
}

impl Histogram {
    pub fn rows(&self) -> Vec<HistogramRow> {
        let n = self.breaks.len();
        let mut rows = vec![HistogramRow {
            bin_low: None,
            bin_high: Some(self.breaks[0]),
            count: self.underflow,
        }];
        rows.extend(self.counts.iter().enumerate().map(|(i, &count)| HistogramRow {
            bin_low: Some(self.breaks[i]),
            bin_high: Some(self.breaks[i + 1]),
            count,
        }));
        rows.push(HistogramRow {
            bin_low: Some(self.breaks[n - 1]),
            bin_high: None,
            count: self.overflow,
        });
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RasterKind;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Geometry {
        Geometry::polygon_from_ring(vec![
            GeoPoint::new(x0, y0),
            GeoPoint::new(x1, y0),
            GeoPoint::new(x1, y1),
            GeoPoint::new(x0, y1),
        ])
    }

    fn unit_grid(n: usize) -> GridSpec {
        GridSpec::new(n, n, 0.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn square_covers_hundred_cells() {
        let spec = GridSpec::new(20, 20, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(rasterize_polygon(&square(0.0, 0.0, 10.0, 10.0), &spec, 1).unwrap().count(), 100);
    }

    #[test]
    fn half_square_triangles() {
        let spec = unit_grid(10);
        let p = |x, y| GeoPoint::new(x, y);
        let lower = Geometry::polygon_from_ring(vec![p(0.0, 0.0), p(10.0, 0.0), p(10.0, 10.0)]);
        let upper = Geometry::polygon_from_ring(vec![p(0.0, 0.0), p(10.0, 10.0), p(0.0, 10.0)]);
        let a = rasterize_polygon(&lower, &spec, 1).unwrap().count();
        let b = rasterize_polygon(&upper, &spec, 1).unwrap().count();
        assert_eq!(a + b, 100);
        assert!([45, 55].contains(&a), "{a}");
    }

    #[test]
    fn off_grid_and_degenerate() {
        let spec = unit_grid(10);
        assert_eq!(rasterize_polygon(&square(50.0, 50.0, 60.0, 60.0), &spec, 1).unwrap().count(), 0);
        let flat = Geometry::polygon_from_ring(vec![GeoPoint::new(0.0, 0.0), GeoPoint::new(5.0, 5.0), GeoPoint::new(9.0, 9.0)]);
        assert!(matches!(rasterize_polygon(&flat, &spec, 1), Err(ZonalError::DegeneratePolygon)));
        assert!(matches!(
            rasterize_polygon(&Geometry::Point(GeoPoint::new(1.0, 1.0)), &spec, 1),
            Err(ZonalError::NotPolygon)
        ));
    }

    #[test]
    fn hole_is_excluded() {
        let spec = unit_grid(10);
        let Geometry::Polygon(mut rings) = square(0.0, 0.0, 10.0, 10.0) else { unreachable!() };
        let Geometry::Polygon(hole) = square(2.0, 2.0, 4.0, 4.0) else { unreachable!() };
        rings.extend(hole);
        assert_eq!(rasterize_polygon(&Geometry::Polygon(rings), &spec, 1).unwrap().count(), 96);
    }

    fn inputs_for(dem: &Raster) -> (Raster, Raster) {
        let exec = Executor::sequential();
        let slope = crate::morphometry::slope(dem, 1e-8, &exec).unwrap();
        let aspect = crate::morphometry::aspect(dem, 1e-8, &exec).unwrap();
        (slope, aspect)
    }

    #[test]
    fn constant_dem_statistics() {
        let spec = unit_grid(12);
        let dem = Raster::filled(spec, 144.67, RasterKind::Continuous).unwrap();
        let (slope, aspect) = inputs_for(&dem);
        let poly = square(1.0, 1.0, 9.0, 7.0);
        let mask = rasterize_polygon(&poly, &spec, 3).unwrap();
        let z = zonal_stats(ZonalInputs { dem: &dem, slope: &slope, aspect: &aspect }, &mask, 3, &poly, "a").unwrap();
        assert_eq!(z.alt_mean, 144.67);
        assert_eq!(z.alt_amplitude, 0.0);
        assert_eq!(z.alt_stddev, 0.0);
        assert_eq!(z.cell_count, 48);
        assert_eq!(z.area_m2, 48.0);
        assert_eq!(z.aspect_mean_circular, None);
        assert_eq!(z.slope.unwrap().mean, 0.0);
        assert!((z.perimeter_km - 0.028).abs() < 1e-15);
        assert!((z.long_axis_km - 0.010).abs() < 1e-15);
        assert!((z.short_axis_km - 0.006).abs() < 1e-15);
    }

    #[test]
    fn two_cell_amplitude() {
        let spec = GridSpec::new(2, 1, 0.0, 0.0, 1.0).unwrap();
        let dem = Raster::new(spec, vec![134.94, 147.51], RasterKind::Continuous).unwrap();
        let nod = Raster::filled(spec, spec.nodata, RasterKind::Continuous).unwrap();
        let poly = grid_extent_polygon(&spec);
        let z = zonal_stats(ZonalInputs { dem: &dem, slope: &nod, aspect: &nod }, &ZoneMask::full(spec, 0), 0, &poly, "e1")
            .unwrap();
        assert!((z.alt_amplitude - 12.57).abs() < 1e-9);
        assert_eq!(z.alt_amplitude, z.alt_max - z.alt_min);
        assert_eq!(z.slope, None);
    }

    #[test]
    fn empty_zone_and_spec_mismatch() {
        let spec = unit_grid(4);
        let dem = Raster::filled(spec, 1.0, RasterKind::Continuous).unwrap();
        let poly = square(0.0, 0.0, 4.0, 4.0);
        let inputs = ZonalInputs { dem: &dem, slope: &dem, aspect: &dem };
        assert!(matches!(zonal_stats(inputs, &ZoneMask::empty(spec), 1, &poly, "x"), Err(ZonalError::EmptyZone(_))));
        let other = ZoneMask::full(unit_grid(5), 1);
        assert!(matches!(zonal_stats(inputs, &other, 1, &poly, "x"), Err(ZonalError::Raster(RasterError::SpecMismatch))));
    }

    #[test]
    fn circular_mean_wraps() {
        assert!(circular_mean_deg([350.0, 10.0]).unwrap().abs() < 1e-9);
        assert!((circular_mean_deg([80.0, 100.0]).unwrap() - 90.0).abs() < 1e-9);
        assert!((circular_mean_deg([260.0, 280.0]).unwrap() - 270.0).abs() < 1e-9);
        assert_eq!(circular_mean_deg([]), None);
    }

    #[test]
    fn histogram_bins() {
        let spec = GridSpec::new(4, 1, 0.0, 0.0, 1.0).unwrap();
        let r = Raster::new(spec, vec![1.0, 2.0, 3.0, spec.nodata], RasterKind::Continuous).unwrap();
        let h = histogram(&r, None, &[1.5, 2.5]).unwrap();
        assert_eq!((h.underflow, h.counts.clone(), h.overflow), (1, vec![1], 1));
        assert_eq!(h.total(), 3);
        assert!(matches!(histogram(&r, None, &[2.0, 1.0]), Err(ZonalError::BadBreaks)));
        assert!(matches!(histogram(&r, None, &[2.0]), Err(ZonalError::BadBreaks)));
        let csv = csv_table_string(&h.rows()).unwrap();
        assert_eq!(csv, "bin_low,bin_high,count\n,1.500000,1\n1.500000,2.500000,1\n2.500000,,1\n");
    }

    #[test]
    fn uniform_breaks_hold_the_maximum() {
        let b = uniform_breaks(10.0, 20.0, 5).unwrap();
        assert_eq!(b.len(), 6);
        let spec = GridSpec::new(2, 1, 0.0, 0.0, 1.0).unwrap();
        let r = Raster::new(spec, vec![10.0, 20.0], RasterKind::Continuous).unwrap();
        let h = histogram(&r, None, &b).unwrap();
        assert_eq!((h.underflow, h.overflow), (0, 0));
        assert_eq!(h.counts, vec![1, 0, 0, 0, 1]);
    }

    #[test]
    fn table_has_whole_area_last() {
        let spec = unit_grid(16);
        let exec = Executor::sequential();
        let dem = Raster::from_fn(spec, RasterKind::Continuous, &exec, |x, y| 100.0 + 0.5 * x + 0.2 * y).unwrap();
        let (slope, aspect) = inputs_for(&dem);
        let layer = VectorLayer::new(
            crate::vector_io::LayerKind::Polygons,
            vec![
                crate::vector_io::Feature::new(square(4.0, 4.0, 8.0, 8.0)),
                crate::vector_io::Feature::new(square(2.0, 2.0, 12.0, 12.0)),
            ],
        );
        let rows = zonal_table(ZonalInputs { dem: &dem, slope: &slope, aspect: &aspect }, &layer, &exec).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].zone, "zone_1");
        assert_eq!(rows[2].zone, ENTIRE_AREA);
        assert!(rows[0].area_ha < rows[1].area_ha && rows[1].area_ha < rows[2].area_ha);
        let whole = crate::raster::raster_minmax_mean(&dem).unwrap();
        assert_eq!((rows[2].alt_min, rows[2].alt_max), (whole.min, whole.max));
        let csv = zonal_table_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("zone,area_km2,area_ha,perimeter_km,long_axis_km,short_axis_km,alt_min_m,"));
    }
}
