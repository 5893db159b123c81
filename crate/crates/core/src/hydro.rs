//! Seeded lake fill below a pour elevation and pour-level search.

use std::collections::VecDeque;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::raster::{GridSpec, Raster, RasterKind};
use crate::vector_io::{csv_table_string, CsvRecord, CsvValue, GeoPoint, Geometry, VectorError};
use crate::zonal::{point_in_polygon, rasterize_polygon, ZonalError, ZoneMask};

/// Resolution of the pour elevation search, in meters.
pub const POUR_TOLERANCE_M: f64 = 0.01;

#[derive(Debug, Error)]
pub enum HydroError {
    #[error("seed ({x}, {y}) lies outside the grid")]
    SeedOutsideGrid { x: f64, y: f64 },
    #[error("seed ({x}, {y}) is on a nodata cell")]
    SeedOnNodata { x: f64, y: f64 },
    #[error("seed ({x}, {y}) lies outside the containment polygon")]
    SeedOutsideContainment { x: f64, y: f64 },
    #[error("no fill of positive depth stays inside the containment polygon")]
    NoFill,
    #[error("the fill never leaves the containment polygon, even above the highest cell")]
    Unbounded,
    #[error("pour elevation must be finite, got {0}")]
    BadPour(f64),
    #[error(transparent)]
    Zonal(#[from] ZonalError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LakeResult {
    /// Lake cells carry zone 1.
    pub mask: ZoneMask,
    pub pour_elevation: f64,
    pub area_m2: f64,
    /// Sum of `pour - z` over lake cells in row-major order, times cellsize².
    pub volume_m3: f64,
    pub max_depth: f64,
    /// The lake reaches the outermost row or column.
    pub touched_boundary: bool,
    pub cell_count: usize,
}

impl LakeResult {
    fn from_cells(dem: &Raster, mut cells: Vec<usize>, pour: f64) -> LakeResult {
        let spec = *dem.spec();
        cells.sort_unstable();
        let mut mask = ZoneMask::empty(spec);
        let mut depth_sum = 0.0;
        let mut min_z = f64::INFINITY;
        let mut touched = false;
        for &i in &cells {
            let z = dem.values()[i];
            mask.set(i, Some(1));
            depth_sum += pour - z;
            min_z = min_z.min(z);
            let (row, col) = (i / spec.ncols, i % spec.ncols);
            touched |= row == 0 || col == 0 || row + 1 == spec.nrows || col + 1 == spec.ncols;
        }
        let cell_area = spec.cellsize * spec.cellsize;
        LakeResult {
            mask,
            pour_elevation: pour,
            area_m2: cells.len() as f64 * cell_area,
            volume_m3: depth_sum * cell_area,
            max_depth: if cells.is_empty() { 0.0 } else { pour - min_z },
            touched_boundary: touched,
            cell_count: cells.len(),
        }
    }

    /// Categorical grid with 1 on lake cells and nodata elsewhere.
    pub fn mask_raster(&self) -> Raster {
        let spec = *self.mask.spec();
        let values = self
            .mask
            .membership()
            .iter()
            .map(|z| if z.is_some() { 1.0 } else { spec.nodata })
            .collect();
        Raster::new(spec, values, RasterKind::Categorical).expect("mask values are valid")
    }
}

fn seed_cell(dem: &Raster, seed: GeoPoint) -> Result<usize, HydroError> {
    let spec = dem.spec();
    let (row, col) = spec
        .cell_of(seed.x, seed.y)
        .ok_or(HydroError::SeedOutsideGrid { x: seed.x, y: seed.y })?;
    if dem.value(row, col).is_none() {
        return Err(HydroError::SeedOnNodata { x: seed.x, y: seed.y });
    }
    Ok(spec.index(row, col))
}

/// Breadth-first 4-connected fill over valid cells below `pour`.
///
/// Returns `None` as soon as a lake cell satisfies `escaped`.
fn flood(dem: &Raster, start: usize, pour: f64, escaped: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
    let spec: &GridSpec = dem.spec();
    let values = dem.values();
    let wet = |i: usize| {
        let z = values[i];
        !dem.is_nodata(z) && z < pour
    };
    if !wet(start) {
        return Some(Vec::new());
    }
    let mut seen = vec![false; spec.len()];
    let mut queue = VecDeque::from([start]);
    let mut cells = Vec::new();
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        if escaped(i) {
            return None;
        }
        cells.push(i);
        let (row, col) = (i / spec.ncols, i % spec.ncols);
        let mut visit = |j: usize| {
            if !seen[j] && wet(j) {
                seen[j] = true;
                queue.push_back(j);
            }
        };
        if row > 0 {
            visit(i - spec.ncols);
        }
        if row + 1 < spec.nrows {
            visit(i + spec.ncols);
        }
        if col > 0 {
            visit(i - 1);
        }
        if col + 1 < spec.ncols {
            visit(i + 1);
        }
    }
    Some(cells)
}

/// Floods from `seed` over cells strictly below `pour`; nodata blocks.
pub fn fill_lake(dem: &Raster, seed: GeoPoint, pour: f64) -> Result<LakeResult, HydroError> {
    if !pour.is_finite() {
        return Err(HydroError::BadPour(pour));
    }
    let start = seed_cell(dem, seed)?;
    let cells = flood(dem, start, pour, |_| false).expect("unbounded flood never escapes");
    Ok(LakeResult::from_cells(dem, cells, pour))
}

/// Highest pour elevation, to [`POUR_TOLERANCE_M`], whose fill stays inside
/// `containment` without reaching the grid edge.
pub fn find_pour_elevation(dem: &Raster, seed: GeoPoint, containment: &Geometry) -> Result<LakeResult, HydroError> {
    let start = seed_cell(dem, seed)?;
    let inside = rasterize_polygon(containment, dem.spec(), 1)?;
    let Geometry::Polygon(rings) = containment else {
        unreachable!("rasterize_polygon accepts polygons only")
    };
    if !point_in_polygon(rings, seed.x, seed.y) {
        return Err(HydroError::SeedOutsideContainment { x: seed.x, y: seed.y });
    }
    let spec = *dem.spec();
    let escaped = |i: usize| {
        let (row, col) = (i / spec.ncols, i % spec.ncols);
        inside.membership()[i].is_none() || row == 0 || col == 0 || row + 1 == spec.nrows || col + 1 == spec.ncols
    };
    let contained = |pour: f64| flood(dem, start, pour, escaped).is_some();

    let top = dem.valid_values().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = dem.values()[start];
    let mut hi = top + 1.0;
    if contained(hi) {
        return Err(HydroError::Unbounded);
    }
    while hi - lo > POUR_TOLERANCE_M {
        let mid = lo + (hi - lo) / 2.0;
        if contained(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lake = fill_lake(dem, seed, lo)?;
    if lake.cell_count == 0 {
        return Err(HydroError::NoFill);
    }
    Ok(lake)
}

/// One line of the lake scenario log.
#[derive(Debug, Clone, PartialEq)]
pub struct LakeScenario {
    pub label: String,
    pub seed: GeoPoint,
    pub pour_elevation: f64,
    pub area_m2: f64,
    pub volume_m3: f64,
    pub max_depth: f64,
    pub cell_count: usize,
    pub touched_boundary: bool,
}

impl LakeScenario {
    pub fn new(label: &str, seed: GeoPoint, lake: &LakeResult) -> Self {
        LakeScenario {
            label: label.to_string(),
            seed,
            pour_elevation: lake.pour_elevation,
            area_m2: lake.area_m2,
            volume_m3: lake.volume_m3,
            max_depth: lake.max_depth,
            cell_count: lake.cell_count,
            touched_boundary: lake.touched_boundary,
        }
    }
}

impl CsvRecord for LakeScenario {
    fn header() -> Vec<&'static str> {
        vec![
            "scenario",
            "seed_x",
            "seed_y",
            "pour_elevation_m",
            "area_m2",
            "volume_m3",
            "max_depth_m",
            "cell_count",
            "touched_boundary",
        ]
    }

    fn values(&self) -> Vec<CsvValue> {
        vec![
            self.label.as_str().into(),
            self.seed.x.into(),
            self.seed.y.into(),
            self.pour_elevation.into(),
            self.area_m2.into(),
            self.volume_m3.into(),
            self.max_depth.into(),
            self.cell_count.into(),
            CsvValue::Integer(self.touched_boundary as i64),
        ]
    }
}

/// Appends rows, writing the header first when the log is new or empty.
pub fn append_scenario_log(path: impl AsRef<Path>, rows: &[LakeScenario]) -> Result<(), HydroError> {
    let path = path.as_ref();
    let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    let text = csv_table_string(rows)?;
    let body = if fresh { text.as_str() } else { text.split_once('\n').map_or("", |(_, rest)| rest) };
    OpenOptions::new().create(true).append(true).open(path)?.write_all(body.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::Executor;

    fn pit() -> Raster {
        // 10x10 pit, 2 m deep, inside a 14x14 grid of 1 m cells.
        let spec = GridSpec::new(14, 14, 0.0, 0.0, 1.0).unwrap();
        let values = (0..spec.len())
            .map(|i| {
                let (r, c) = (i / 14, i % 14);
                if (2..12).contains(&r) && (2..12).contains(&c) {
                    8.0
                } else {
                    10.0
                }
            })
            .collect();
        Raster::new(spec, values, RasterKind::Continuous).unwrap()
    }

    #[test]
    fn box_pit_is_exact() {
        let lake = fill_lake(&pit(), GeoPoint::new(7.0, 7.0), 10.0).unwrap();
        assert_eq!(lake.area_m2, 100.0);
        assert_eq!(lake.volume_m3, 200.0);
        assert_eq!(lake.max_depth, 2.0);
        assert!(!lake.touched_boundary);
        assert_eq!(lake.mask_raster().valid_values().count(), 100);
    }

    #[test]
    fn seed_at_or_above_pour_is_empty() {
        let lake = fill_lake(&pit(), GeoPoint::new(7.0, 7.0), 8.0).unwrap();
        assert_eq!((lake.area_m2, lake.volume_m3, lake.cell_count), (0.0, 0.0, 0));
    }

    #[test]
    fn leaking_fill_touches_boundary() {
        let lake = fill_lake(&pit(), GeoPoint::new(7.0, 7.0), 10.5).unwrap();
        assert!(lake.touched_boundary);
        assert_eq!(lake.cell_count, 196);
    }

    #[test]
    fn seed_errors() {
        let mut values = pit().into_values();
        values[7 * 14 + 7] = -9999.0;
        let dem = Raster::new(*pit().spec(), values, RasterKind::Continuous).unwrap();
        assert!(matches!(fill_lake(&dem, GeoPoint::new(7.5, 6.5), 10.0), Err(HydroError::SeedOnNodata { .. })));
        assert!(matches!(fill_lake(&dem, GeoPoint::new(70.0, 6.5), 10.0), Err(HydroError::SeedOutsideGrid { .. })));
    }

    #[test]
    fn pour_search_finds_rim() {
        let containment = Geometry::polygon_from_ring(vec![
            GeoPoint::new(0.5, 0.5),
            GeoPoint::new(13.5, 0.5),
            GeoPoint::new(13.5, 13.5),
            GeoPoint::new(0.5, 13.5),
        ]);
        let lake = find_pour_elevation(&pit(), GeoPoint::new(7.0, 7.0), &containment).unwrap();
        assert!(lake.pour_elevation <= 10.0 && lake.pour_elevation > 10.0 - POUR_TOLERANCE_M);
        assert_eq!(lake.cell_count, 100);
    }

    #[test]
    fn peak_seed_has_no_fill() {
        let spec = GridSpec::new(9, 9, 0.0, 0.0, 1.0).unwrap();
        let dem = Raster::from_fn(spec, RasterKind::Continuous, &Executor::sequential(), |x, y| {
            10.0 - (x - 4.5).abs() - (y - 4.5).abs()
        })
        .unwrap();
        let containment = Geometry::polygon_from_ring(vec![
            GeoPoint::new(2.0, 2.0),
            GeoPoint::new(7.0, 2.0),
            GeoPoint::new(7.0, 7.0),
            GeoPoint::new(2.0, 7.0),
        ]);
        assert!(matches!(find_pour_elevation(&dem, GeoPoint::new(4.5, 4.5), &containment), Err(HydroError::NoFill)));
    }

    #[test]
    fn scenario_log_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let lake = fill_lake(&pit(), GeoPoint::new(7.0, 7.0), 10.0).unwrap();
        let row = LakeScenario::new("a", GeoPoint::new(7.0, 7.0), &lake);
        append_scenario_log(&path, std::slice::from_ref(&row)).unwrap();
        append_scenario_log(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("scenario,seed_x"));
    }
}
