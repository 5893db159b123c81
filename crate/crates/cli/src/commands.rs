use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use morphokit::hydro::{append_scenario_log, fill_lake, find_pour_elevation, LakeScenario};
use morphokit::morphometry::{KernelParams, KernelRegistry, DEFAULT_FLAT_THRESHOLD};
use morphokit::parallel::Executor;
use morphokit::profile::{detect_knickpoints, sample_profile, DEFAULT_MIN_DROP_M, DEFAULT_WINDOW_M};
use morphokit::raster::{ascii_grid_string, Raster, RasterKind, DEFAULT_CELLSIZE};
use morphokit::tin::DEFAULT_FLAT_TOLERANCE;
use morphokit::vector_io::{csv_table_string, GeoPoint, LayerKind, LoadOptions, VectorLayer, DEFAULT_ELEVATION_PROPERTY};
use morphokit::zonal::{histogram, uniform_breaks, zonal_table, zonal_table_csv, ZonalInputs};

use crate::error::{CliError, CliResult};
use crate::output::write_atomic;
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::render::{render_profile, render_raster, ColormapRegistry};
use crate::stages::{
    build_dem, feature_label, load_layer, load_raster, parse_bounds, parse_point, read_profile_csv, select_feature,
    DemOptions,
};

/// Keeps clap from treating a comma list as repeated values.
type F64List = Vec<f64>;

#[derive(Debug, Parser)]
#[command(name = "morphokit", version, about = "Terrain morphometry from contour maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Contours (and spot heights) to a TIN-interpolated DEM.
    BuildDem(BuildDemArgs),
    /// Slope in degrees.
    Slope(KernelArgs),
    /// Aspect in degrees clockwise from north, -1 on flats.
    Aspect(KernelArgs),
    /// Reclassify a raster into categories.
    Reclass(ReclassArgs),
    /// Per-polygon morphometry table.
    Zonal(ZonalArgs),
    /// Histogram of raster values.
    Hist(HistArgs),
    /// Elevation profile along a polyline.
    Profile(ProfileArgs),
    /// Knickpoints in a profile CSV.
    Knick(KnickArgs),
    /// Fill a lake from a seed point.
    Lake(LakeArgs),
    /// Render a raster or profile to PNG.
    Render(RenderArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct BuildDemArgs {
    #[arg(long)]
    pub contours: PathBuf,
    #[arg(long)]
    pub spot_heights: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_CELLSIZE)]
    pub cellsize: f64,
    /// xmin,ymin,xmax,ymax; defaults to the input bounding box.
    #[arg(long, value_parser = parse_bounds)]
    pub bounds: Option<[f64; 4]>,
    #[arg(long, default_value_t = DEFAULT_FLAT_TOLERANCE)]
    pub flat_tolerance: f64,
    /// Skip flat-triangle repair.
    #[arg(long)]
    pub no_repair: bool,
    #[arg(long, default_value = DEFAULT_ELEVATION_PROPERTY)]
    pub elevation_property: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub dem: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FLAT_THRESHOLD)]
    pub flat_threshold: f64,
    /// 0 uses one worker per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scheme {
    /// Aspect degrees to 8 compass classes.
    Aspect8,
    /// Aspect classes to 4 exposure groups.
    Exposure4,
    /// Elevation bands from --breaks.
    Hypsometry,
}

#[derive(Debug, Args)]
pub struct ReclassArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: Scheme,
    #[arg(long, value_parser = crate::config::parse_f64_list)]
    pub breaks: Option<F64List>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ZonalArgs {
    #[arg(long)]
    pub dem: PathBuf,
    #[arg(long)]
    pub slope: PathBuf,
    #[arg(long)]
    pub aspect: PathBuf,
    #[arg(long)]
    pub zones: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    #[arg(long)]
    pub raster: PathBuf,
    #[arg(long, value_parser = crate::config::parse_f64_list, conflicts_with = "bins")]
    pub breaks: Option<F64List>,
    /// Equal-width bins over the value range.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Count only cells inside this polygon layer's selected feature.
    #[arg(long)]
    pub zones: Option<PathBuf>,
    #[arg(long, requires = "zones")]
    pub feature: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long)]
    pub dem: PathBuf,
    #[arg(long)]
    pub line: PathBuf,
    /// Feature index or name; defaults to the first.
    #[arg(long)]
    pub feature: Option<String>,
    /// Sample spacing in meters; defaults to the cellsize.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub png: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KnickArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW_M)]
    pub window: f64,
    #[arg(long, default_value_t = DEFAULT_MIN_DROP_M)]
    pub min_drop: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LakeArgs {
    #[arg(long)]
    pub dem: PathBuf,
    /// x,y
    #[arg(long, value_parser = parse_point)]
    pub seed: GeoPoint,
    /// Fixed water level.
    #[arg(long, conflicts_with = "containment", required_unless_present = "containment")]
    pub pour: Option<f64>,
    /// Polygon the lake must stay inside; the pour level is searched.
    #[arg(long)]
    pub containment: Option<PathBuf>,
    #[arg(long)]
    pub feature: Option<String>,
    #[arg(long, default_value = "lake")]
    pub label: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Scenario log to append to.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, required_unless_present = "profile", conflicts_with = "profile")]
    pub raster: Option<PathBuf>,
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Knickpoint CSV to mark on a profile plot.
    #[arg(long, requires = "profile")]
    pub knickpoints: Option<PathBuf>,
    #[arg(long, default_value = "terrain")]
    pub colormap: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output.dir` from the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn write_raster(path: &Path, raster: &Raster) -> CliResult<()> {
    write_atomic(path, ascii_grid_string(raster).as_bytes())
}

fn kernel(name: &str, params: KernelParams, input: &Raster, workers: usize) -> CliResult<Raster> {
    let exec = Executor::with_workers(workers);
    Ok(KernelRegistry::builtin().create(name, &params)?.apply(input, &exec)?)
}

fn count_valid(r: &Raster) -> usize {
    r.valid_values().count()
}

/// Runs one subcommand and returns its summary line.
pub fn run(command: Command) -> CliResult<String> {
    match command {
        Command::BuildDem(a) => {
            let options = LoadOptions {
                elevation_property: a.elevation_property,
            };
            let contours = load_layer(&a.contours, LayerKind::Contours, &options)?;
            let spots = a
                .spot_heights
                .as_deref()
                .map(|p| load_layer(p, LayerKind::SpotHeights, &options))
                .transpose()?;
            let layers: Vec<&VectorLayer> = std::iter::once(&contours).chain(spots.as_ref()).collect();
            let dem_options = DemOptions {
                cellsize: a.cellsize,
                bounds: a.bounds,
                flat_tolerance: a.flat_tolerance,
                repair: !a.no_repair,
            };
            let build = build_dem(&layers, &dem_options, &Executor::with_workers(0))?;
            write_raster(&a.out, &build.dem)?;
            Ok(format!("{}: {}", a.out.display(), build.describe()))
        }
        Command::Slope(a) => {
            let dem = load_raster(&a.dem, RasterKind::Continuous)?;
            let out = kernel("slope", KernelParams::new().set("flat_threshold", a.flat_threshold), &dem, a.workers)?;
            write_raster(&a.out, &out)?;
            Ok(format!("{}: slope for {} cells", a.out.display(), count_valid(&out)))
        }
        Command::Aspect(a) => {
            let dem = load_raster(&a.dem, RasterKind::Continuous)?;
            let out = kernel("aspect", KernelParams::new().set("flat_threshold", a.flat_threshold), &dem, a.workers)?;
            let flats = out.valid_values().filter(|&v| v < 0.0).count();
            write_raster(&a.out, &out)?;
            Ok(format!("{}: aspect for {} cells, {flats} flat", a.out.display(), count_valid(&out)))
        }
        Command::Reclass(a) => {
            let (name, kind, params) = match a.scheme {
                Scheme::Aspect8 => ("aspect8", RasterKind::Continuous, KernelParams::new()),
                Scheme::Exposure4 => ("exposure4", RasterKind::Categorical, KernelParams::new()),
                Scheme::Hypsometry => {
                    let breaks = a.breaks.ok_or_else(|| CliError::Usage("hypsometry needs --breaks".into()))?;
                    let list = breaks.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
                    ("hypsometry", RasterKind::Continuous, KernelParams::new().set("breaks", list))
                }
            };
            let input = load_raster(&a.input, kind)?;
            let out = kernel(name, params, &input, 1)?;
            let mut classes: Vec<i64> = out.valid_values().map(|v| v as i64).collect();
            classes.sort_unstable();
            classes.dedup();
            write_raster(&a.out, &out)?;
            Ok(format!("{}: {name}, {} classes present", a.out.display(), classes.len()))
        }
        Command::Zonal(a) => {
            let dem = load_raster(&a.dem, RasterKind::Continuous)?;
            let slope = load_raster(&a.slope, RasterKind::Continuous)?;
            let aspect = load_raster(&a.aspect, RasterKind::Continuous)?;
            let zones = load_layer(&a.zones, LayerKind::Polygons, &LoadOptions::default())?;
            let inputs = ZonalInputs {
                dem: &dem,
                slope: &slope,
                aspect: &aspect,
            };
            let rows = zonal_table(inputs, &zones, &Executor::with_workers(0))?;
            write_atomic(&a.out, zonal_table_csv(&rows)?.as_bytes())?;
            Ok(format!("{}: {} zones plus entire area", a.out.display(), rows.len() - 1))
        }
        Command::Hist(a) => {
            let raster = load_raster(&a.raster, RasterKind::Continuous)?;
            let mask = match &a.zones {
                Some(path) => {
                    let layer = load_layer(path, LayerKind::Polygons, &LoadOptions::default())?;
                    let (_, feature) = select_feature(&layer, a.feature.as_deref())?;
                    Some(morphokit::zonal::rasterize_polygon(&feature.geometry, raster.spec(), 1)?)
                }
                None => None,
            };
            let breaks = match (a.breaks, a.bins) {
                (Some(b), _) => b,
                (None, Some(bins)) => {
                    let (lo, hi) = raster
                        .valid_values()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    uniform_breaks(lo, hi, bins)?
                }
                (None, None) => return Err(CliError::Usage("hist needs --breaks or --bins".into())),
            };
            let h = histogram(&raster, mask.as_ref(), &breaks)?;
            write_atomic(&a.out, csv_table_string(&h.rows())?.as_bytes())?;
            Ok(format!("{}: {} cells in {} bins", a.out.display(), h.total(), h.counts.len()))
        }
        Command::Profile(a) => {
            let dem = load_raster(&a.dem, RasterKind::Continuous)?;
            let layer = load_layer(&a.line, LayerKind::Polylines, &LoadOptions::default())?;
            let (index, feature) = select_feature(&layer, a.feature.as_deref())?;
            let step = a.step.unwrap_or(dem.spec().cellsize);
            let mut series = sample_profile(&dem, &feature.geometry, step)?;
            series.source = Some(feature_label(feature, index, "profile"));
            write_atomic(&a.out, csv_table_string(&series.samples)?.as_bytes())?;
            if let Some(png) = &a.png {
                write_atomic(png, &render_profile(&series, &[])?)?;
            }
            Ok(format!(
                "{}: {} samples over {:.3} m",
                a.out.display(),
                series.samples.len(),
                series.length()
            ))
        }
        Command::Knick(a) => {
            let series = read_profile_csv(&a.profile)?;
            let knicks = detect_knickpoints(&series, a.window, a.min_drop)?;
            write_atomic(&a.out, csv_table_string(&knicks)?.as_bytes())?;
            let list = knicks.iter().map(|k| format!("{:.1} m ({:+.2})", k.distance, k.drop)).collect::<Vec<_>>();
            Ok(format!("{}: {} knickpoints {}", a.out.display(), knicks.len(), list.join(", ")).trim_end().to_string())
        }
        Command::Lake(a) => {
            let dem = load_raster(&a.dem, RasterKind::Continuous)?;
            let lake = match (a.pour, &a.containment) {
                (Some(pour), _) => fill_lake(&dem, a.seed, pour)?,
                (None, Some(path)) => {
                    let layer = load_layer(path, LayerKind::Polygons, &LoadOptions::default())?;
                    let (_, feature) = select_feature(&layer, a.feature.as_deref())?;
                    find_pour_elevation(&dem, a.seed, &feature.geometry)?
                }
                (None, None) => return Err(CliError::Usage("lake needs --pour or --containment".into())),
            };
            write_raster(&a.out, &lake.mask_raster())?;
            if let Some(log) = &a.log {
                append_scenario_log(log, &[LakeScenario::new(&a.label, a.seed, &lake)]).map_err(|e| CliError::from(e).at(log))?;
            }
            Ok(format!(
                "{}: pour {:.2} m, area {:.1} m2, volume {:.1} m3, max depth {:.2} m",
                a.out.display(),
                lake.pour_elevation,
                lake.area_m2,
                lake.volume_m3,
                lake.max_depth
            ))
        }
        Command::Render(a) => {
            let png = if let Some(path) = &a.profile {
                let series = read_profile_csv(path)?;
                let knicks = match &a.knickpoints {
                    Some(k) => read_knickpoints(k)?,
                    None => Vec::new(),
                };
                render_profile(&series, &knicks)?
            } else {
                let path = a.raster.as_deref().expect("clap requires --raster or --profile");
                let colormaps = ColormapRegistry::builtin();
                let map = colormaps.get(&a.colormap)?;
                let kind = if a.colormap == "categorical" { RasterKind::Categorical } else { RasterKind::Continuous };
                render_raster(&load_raster(path, kind)?, map)?
            };
            write_atomic(&a.out, &png)?;
            Ok(format!("{}: {} bytes", a.out.display(), png.len()))
        }
        Command::Pipeline(a) => {
            let mut config = PipelineConfig::load(&a.config)?;
            if let Some(dir) = a.out_dir {
                config.out_dir = dir;
            }
            let report = run_pipeline(&config)?;
            let mut s = format!("{}: {} files", config.out_dir.display(), report.files.len());
            if report.zones > 0 {
                s += &format!(", {} zonal rows", report.zones);
            }
            s += &format!(", {} knickpoints", report.knickpoints);
            if let Some(area) = report.lake_area_m2 {
                s += &format!(", lake {area:.1} m2");
            }
            Ok(s)
        }
    }
}

fn read_knickpoints(path: &Path) -> CliResult<Vec<morphokit::profile::Knickpoint>> {
    crate::stages::require(path)?;
    let (header, rows) = morphokit::vector_io::read_csv_table(path).map_err(|e| CliError::from(e).at(path))?;
    if header.first().map(String::as_str) != Some("distance_m") || header.len() < 4 {
        return Err(CliError::Usage(format!("unexpected knickpoint header {header:?}")).at(path));
    }
    rows.iter()
        .map(|r| {
            let n = |i: usize| {
                r[i].parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("'{}' is not a number", r[i])).at(path))
            };
            Ok(morphokit::profile::Knickpoint {
                distance: n(0)?,
                drop: n(1)?,
                upstream_mean: n(2)?,
                downstream_mean: n(3)?,
                window: 0.0,
            })
        })
        .collect()
}
