//! Input loading and the computations shared by subcommands and `pipeline`.

use std::path::Path;

use morphokit::parallel::Executor;
use morphokit::profile::{ProfileSample, ProfileSeries};
use morphokit::raster::{rasterize_tin, read_ascii_grid_as, GridSpec, Raster, RasterKind};
use morphokit::tin::{remove_bridge_tunnel_edges, triangulate, RepairReport};
use morphokit::vector_io::{
    load_vector_layer_with, read_csv_table, validate_contours, ContourSet, ContourSummary, Feature, GeoPoint, LayerKind,
    LoadOptions, VectorLayer,
};

use crate::error::{CliError, CliResult};

pub fn require(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

pub fn load_raster(path: &Path, kind: RasterKind) -> CliResult<Raster> {
    require(path)?;
    read_ascii_grid_as(path, kind).map_err(|e| CliError::from(e).at(path))
}

pub fn load_layer(path: &Path, kind: LayerKind, options: &LoadOptions) -> CliResult<VectorLayer> {
    require(path)?;
    load_vector_layer_with(path, kind, options).map_err(|e| CliError::from(e).at(path))
}

/// Picks a feature by zero-based index or by its `name` property.
pub fn select_feature<'a>(layer: &'a VectorLayer, selector: Option<&str>) -> CliResult<(usize, &'a Feature)> {
    let Some(sel) = selector else {
        return layer
            .features
            .first()
            .map(|f| (0, f))
            .ok_or_else(|| CliError::Usage("layer has no features".into()));
    };
    let found = match sel.parse::<usize>() {
        Ok(i) => layer.features.get(i).map(|f| (i, f)),
        Err(_) => layer.features.iter().enumerate().find(|(_, f)| f.name() == Some(sel)),
    };
    found.ok_or_else(|| CliError::Usage(format!("no feature '{sel}' in layer of {}", layer.len())))
}

pub fn feature_label(feature: &Feature, index: usize, prefix: &str) -> String {
    feature.name().map_or_else(|| format!("{prefix}_{}", index + 1), str::to_string)
}

pub fn parse_point(text: &str) -> Result<GeoPoint, String> {
    match crate::config::parse_f64_list(text)?.as_slice() {
        [x, y] => Ok(GeoPoint::new(*x, *y)),
        _ => Err(format!("expected 'x,y', got '{text}'")),
    }
}

pub fn parse_bounds(text: &str) -> Result<[f64; 4], String> {
    match crate::config::parse_f64_list(text)?.as_slice() {
        [a, b, c, d] if a < c && b < d => Ok([*a, *b, *c, *d]),
        [_, _, _, _] => Err(format!("bounds '{text}' need xmin < xmax and ymin < ymax")),
        _ => Err(format!("expected 'xmin,ymin,xmax,ymax', got '{text}'")),
    }
}

#[derive(Debug, Clone)]
pub struct DemOptions {
    pub cellsize: f64,
    /// `None` covers the bounding box of the input vertices.
    pub bounds: Option<[f64; 4]>,
    pub flat_tolerance: f64,
    pub repair: bool,
}

#[derive(Debug)]
pub struct DemBuild {
    pub dem: Raster,
    pub summary: ContourSummary,
    pub triangles: usize,
    pub repair: Option<RepairReport>,
}

impl DemBuild {
    pub fn describe(&self) -> String {
        let spec = self.dem.spec();
        let mut s = format!(
            "{}x{} cells at {} m from {} vertices, {} triangles, z {}..{}",
            spec.ncols, spec.nrows, spec.cellsize, self.summary.vertices, self.triangles, self.summary.z_min, self.summary.z_max
        );
        if let Some(r) = &self.repair {
            s += &format!(
                ", {} flat triangles ({} flipped, {} split, {} unfixable)",
                r.flat_before,
                r.flipped,
                r.split,
                r.unfixable.len()
            );
        }
        s
    }
}

pub fn build_dem(layers: &[&VectorLayer], options: &DemOptions, exec: &Executor) -> CliResult<DemBuild> {
    let sets = layers.iter().map(|l| validate_contours(l)).collect::<Result<Vec<_>, _>>()?;
    let set = ContourSet::merge(&sets).ok_or_else(|| CliError::Usage("no elevation inputs".into()))?;
    let mut tin = triangulate(&set.vertices)?;
    let mut repair = None;
    if options.repair {
        let (fixed, report) = remove_bridge_tunnel_edges(&tin, options.flat_tolerance);
        tin = fixed;
        repair = Some(report);
    }
    let [xmin, ymin, xmax, ymax] = options.bounds.unwrap_or_else(|| {
        set.vertices.iter().fold(
            [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
            |[a, b, c, d], v| [a.min(v.x), b.min(v.y), c.max(v.x), d.max(v.y)],
        )
    });
    let spec = GridSpec::covering(xmin, ymin, xmax, ymax, options.cellsize)?;
    let dem = rasterize_tin(&tin, &spec, exec)?;
    Ok(DemBuild {
        dem,
        summary: set.summary,
        triangles: tin.triangles().len(),
        repair,
    })
}

/// Reads a profile CSV (`distance_m,x,y,elevation_m`); empty elevation is nodata.
pub fn read_profile_csv(path: &Path) -> CliResult<ProfileSeries> {
    require(path)?;
    let bad = |m: String| CliError::Usage(m).at(path);
    let (header, rows) = read_csv_table(path).map_err(|e| CliError::from(e).at(path))?;
    if header != ["distance_m", "x", "y", "elevation_m"] {
        return Err(bad(format!("unexpected profile header {header:?}")));
    }
    let num = |s: &str, line: usize| s.parse::<f64>().map_err(|_| bad(format!("row {line}: '{s}' is not a number")));
    let mut samples = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let elevation = if row[3].is_empty() { None } else { Some(num(&row[3], i + 1)?) };
        samples.push(ProfileSample {
            distance: num(&row[0], i + 1)?,
            x: num(&row[1], i + 1)?,
            y: num(&row[2], i + 1)?,
            elevation,
        });
    }
    if samples.len() < 2 {
        return Err(bad("profile needs at least two samples".into()));
    }
    let step = samples[1].distance - samples[0].distance;
    Ok(ProfileSeries {
        samples,
        step,
        source: path.file_stem().map(|s| s.to_string_lossy().into_owned()),
    })
}
