//! The full batch run driven by one config file.
//!
//! ```text
//! [inputs]                 # paths relative to the config file
//! contours = contours.geojson
//! spot_heights = spot_heights.geojson      # optional
//! zones = enclosures.geojson               # optional
//! profiles = profiles.geojson              # optional
//! lake_containment = containment.geojson   # optional, needs [lake] seed
//!
//! [grid]
//! cellsize = 2
//! bounds = xmin,ymin,xmax,ymax             # default: input bounding box
//!
//! [tin]
//! flat_tolerance = 1e-6
//! repair = true
//!
//! [morphometry]
//! flat_threshold = 1e-8
//! hillshade_azimuth = 315
//! hillshade_altitude = 45
//! hypsometry_breaks = 130,140,150          # optional
//!
//! [zonal]
//! histogram_bins = 10
//!
//! [profile]
//! step = 2                                 # default: cellsize
//! window_m = 20
//! min_drop_m = 0.5
//!
//! [lake]
//! seed = x,y
//! pour = 131.5                             # optional; else searched
//! label = scenario name
//!
//! [output]
//! dir = out
//! workers = 0                              # 0 = one per core
//! png = true
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use morphokit::hydro::{fill_lake, find_pour_elevation, LakeScenario};
use morphokit::morphometry::{KernelParams, KernelRegistry, DEFAULT_FLAT_THRESHOLD};
use morphokit::parallel::Executor;
use morphokit::profile::{detect_knickpoints, sample_profile, DEFAULT_MIN_DROP_M, DEFAULT_WINDOW_M};
use morphokit::raster::{ascii_grid_string, Raster, DEFAULT_CELLSIZE};
use morphokit::tin::DEFAULT_FLAT_TOLERANCE;
use morphokit::vector_io::{csv_table_string, GeoPoint, LayerKind, LoadOptions, VectorLayer};
use morphokit::zonal::{histogram, uniform_breaks, zonal_table, zonal_table_csv, ZonalInputs};

use crate::config::KeyValues;
use crate::error::{CliError, CliResult};
use crate::output::Stage;
use crate::render::{render_profile, render_raster, ColormapRegistry};
use crate::stages::{build_dem, feature_label, load_layer, parse_point, require, DemOptions};

const KEYS: &[&str] = &[
    "inputs.contours",
    "inputs.spot_heights",
    "inputs.zones",
    "inputs.profiles",
    "inputs.lake_containment",
    "grid.cellsize",
    "grid.bounds",
    "tin.flat_tolerance",
    "tin.repair",
    "morphometry.flat_threshold",
    "morphometry.hillshade_azimuth",
    "morphometry.hillshade_altitude",
    "morphometry.hypsometry_breaks",
    "zonal.histogram_bins",
    "profile.step",
    "profile.window_m",
    "profile.min_drop_m",
    "lake.seed",
    "lake.pour",
    "lake.label",
    "output.dir",
    "output.workers",
    "output.png",
];

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub contours: PathBuf,
    pub spot_heights: Option<PathBuf>,
    pub zones: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub lake_containment: Option<PathBuf>,
    pub dem: DemOptions,
    pub flat_threshold: f64,
    pub hillshade: (f64, f64),
    pub hypsometry_breaks: Option<Vec<f64>>,
    pub histogram_bins: usize,
    pub profile_step: Option<f64>,
    pub window_m: f64,
    pub min_drop_m: f64,
    pub lake_seed: Option<GeoPoint>,
    pub lake_pour: Option<f64>,
    pub lake_label: String,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub png: bool,
}

fn config_err(kv: &KeyValues, key: &str, message: String) -> CliError {
    CliError::Config {
        line: kv.line_of(key),
        message,
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<PipelineConfig> {
        require(path)?;
        let text = fs::read_to_string(path).map_err(|e| CliError::from(e).at(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| e.at(path))
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<PipelineConfig> {
        let kv = KeyValues::parse(text)?;
        kv.reject_unknown(KEYS)?;
        let contours = kv
            .path("inputs.contours", base)
            .ok_or_else(|| CliError::Config { line: 0, message: "missing inputs.contours".into() })?;
        let cellsize = kv.parsed_or("grid.cellsize", DEFAULT_CELLSIZE)?;
        if !(cellsize > 0.0 && cellsize.is_finite()) {
            return Err(config_err(&kv, "grid.cellsize", format!("cellsize must be positive, got {cellsize}")));
        }
        let bounds = kv
            .str("grid.bounds")
            .map(|b| crate::stages::parse_bounds(b).map_err(|m| config_err(&kv, "grid.bounds", m)))
            .transpose()?;
        let lake_seed = kv
            .str("lake.seed")
            .map(|s| parse_point(s).map_err(|m| config_err(&kv, "lake.seed", m)))
            .transpose()?;
        let lake_containment = kv.path("inputs.lake_containment", base);
        if lake_seed.is_some() && lake_containment.is_none() && !kv.keys().any(|k| k == "lake.pour") {
            return Err(config_err(&kv, "lake.seed", "lake needs inputs.lake_containment or lake.pour".into()));
        }
        if lake_seed.is_none() && (lake_containment.is_some() || kv.str("lake.pour").is_some()) {
            return Err(CliError::Config { line: 0, message: "lake settings need lake.seed".into() });
        }
        Ok(PipelineConfig {
            contours,
            spot_heights: kv.path("inputs.spot_heights", base),
            zones: kv.path("inputs.zones", base),
            profiles: kv.path("inputs.profiles", base),
            lake_containment,
            dem: DemOptions {
                cellsize,
                bounds,
                flat_tolerance: kv.parsed_or("tin.flat_tolerance", DEFAULT_FLAT_TOLERANCE)?,
                repair: kv.parsed_or("tin.repair", true)?,
            },
            flat_threshold: kv.parsed_or("morphometry.flat_threshold", DEFAULT_FLAT_THRESHOLD)?,
            hillshade: (
                kv.parsed_or("morphometry.hillshade_azimuth", 315.0)?,
                kv.parsed_or("morphometry.hillshade_altitude", 45.0)?,
            ),
            hypsometry_breaks: kv.f64_list("morphometry.hypsometry_breaks")?,
            histogram_bins: kv.parsed_or("zonal.histogram_bins", 10)?,
            profile_step: kv.parsed("profile.step")?,
            window_m: kv.parsed_or("profile.window_m", DEFAULT_WINDOW_M)?,
            min_drop_m: kv.parsed_or("profile.min_drop_m", DEFAULT_MIN_DROP_M)?,
            lake_seed,
            lake_pour: kv.parsed("lake.pour")?,
            lake_label: kv.str("lake.label").unwrap_or("lake").to_string(),
            out_dir: kv.path("output.dir", base).unwrap_or_else(|| base.join("out")),
            workers: kv.parsed_or("output.workers", 0)?,
            png: kv.parsed_or("output.png", true)?,
        })
    }

    pub fn inputs(&self) -> Vec<&Path> {
        let mut v = vec![self.contours.as_path()];
        v.extend(
            [&self.spot_heights, &self.zones, &self.profiles, &self.lake_containment]
                .into_iter()
                .flatten()
                .map(PathBuf::as_path),
        );
        v
    }
}

/// What a pipeline run produced, in write order.
#[derive(Debug, Default)]
pub struct PipelineReport {
    pub files: Vec<PathBuf>,
    pub zones: usize,
    pub knickpoints: usize,
    pub lake_area_m2: Option<f64>,
}

struct Run<'a> {
    config: &'a PipelineConfig,
    exec: Executor,
    kernels: KernelRegistry,
    colormaps: ColormapRegistry,
    report: PipelineReport,
}

impl Run<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn raster(&self, stage: &mut Stage, name: &str, raster: &Raster, colormap: Option<&str>) -> CliResult<()> {
        stage.write(&self.out(&format!("{name}.asc")), ascii_grid_string(raster).as_bytes())?;
        if let (true, Some(map)) = (self.config.png, colormap) {
            let png = render_raster(raster, self.colormaps.get(map)?)?;
            stage.write(&self.out(&format!("{name}.png")), &png)?;
        }
        Ok(())
    }

    fn kernel(&self, name: &str, params: KernelParams, input: &Raster) -> CliResult<Raster> {
        Ok(self.kernels.create(name, &params)?.apply(input, &self.exec)?)
    }

    fn commit(&mut self, stage: Stage) {
        self.report.files.extend(stage.commit());
    }
}

/// Runs every configured stage in dependency order. Each stage either
/// writes all of its outputs or none.
pub fn run_pipeline(config: &PipelineConfig) -> CliResult<PipelineReport> {
    for path in config.inputs() {
        require(path)?;
    }
    let options = LoadOptions::default();
    let contours = load_layer(&config.contours, LayerKind::Contours, &options)?;
    let spots = config
        .spot_heights
        .as_deref()
        .map(|p| load_layer(p, LayerKind::SpotHeights, &options))
        .transpose()?;
    let zones = config.zones.as_deref().map(|p| load_layer(p, LayerKind::Polygons, &options)).transpose()?;
    let profiles = config.profiles.as_deref().map(|p| load_layer(p, LayerKind::Polylines, &options)).transpose()?;
    let containment = config
        .lake_containment
        .as_deref()
        .map(|p| load_layer(p, LayerKind::Polygons, &options))
        .transpose()?;

    fs::create_dir_all(&config.out_dir).map_err(|e| CliError::from(e).at(&config.out_dir))?;
    let mut run = Run {
        config,
        exec: Executor::with_workers(config.workers),
        kernels: KernelRegistry::builtin(),
        colormaps: ColormapRegistry::builtin(),
        report: PipelineReport::default(),
    };

    let mut stage = Stage::new();
    let layers: Vec<&VectorLayer> = std::iter::once(&contours).chain(spots.as_ref()).collect();
    let dem = build_dem(&layers, &config.dem, &run.exec)?.dem;
    run.raster(&mut stage, "dem", &dem, Some("terrain"))?;
    run.commit(stage);

    let mut stage = Stage::new();
    let flat = KernelParams::new().set("flat_threshold", config.flat_threshold);
    let slope = run.kernel("slope", flat.clone(), &dem)?;
    let aspect = run.kernel("aspect", flat, &dem)?;
    let aspect8 = run.kernel("aspect8", KernelParams::new(), &aspect)?;
    let exposure4 = run.kernel("exposure4", KernelParams::new(), &aspect8)?;
    let (azimuth, altitude) = config.hillshade;
    let shade = run.kernel("hillshade", KernelParams::new().set("azimuth", azimuth).set("altitude", altitude), &dem)?;
    run.raster(&mut stage, "slope", &slope, Some("terrain"))?;
    run.raster(&mut stage, "aspect", &aspect, None)?;
    run.raster(&mut stage, "aspect8", &aspect8, Some("categorical"))?;
    run.raster(&mut stage, "exposure4", &exposure4, Some("categorical"))?;
    run.raster(&mut stage, "hillshade", &shade, Some("gray"))?;
    if let Some(breaks) = &config.hypsometry_breaks {
        let list = breaks.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let classes = run.kernel("hypsometry", KernelParams::new().set("breaks", list), &dem)?;
        run.raster(&mut stage, "hypsometry", &classes, Some("categorical"))?;
    }
    run.commit(stage);

    let mut stage = Stage::new();
    let inputs = ZonalInputs {
        dem: &dem,
        slope: &slope,
        aspect: &aspect,
    };
    if let Some(zones) = &zones {
        let rows = zonal_table(inputs, zones, &run.exec)?;
        run.report.zones = rows.len();
        stage.write(&run.out("zonal.csv"), zonal_table_csv(&rows)?.as_bytes())?;
    }
    for (name, raster) in [("elevation", &dem), ("slope", &slope)] {
        let (lo, hi) = raster
            .valid_values()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let h = histogram(raster, None, &uniform_breaks(lo, hi, config.histogram_bins)?)?;
        stage.write(&run.out(&format!("hist_{name}.csv")), csv_table_string(&h.rows())?.as_bytes())?;
    }
    run.commit(stage);

    if let Some(lines) = &profiles {
        let mut stage = Stage::new();
        let step = config.profile_step.unwrap_or(dem.spec().cellsize);
        for (i, feature) in lines.features.iter().enumerate() {
            let name = feature_label(feature, i, "profile");
            let mut series = sample_profile(&dem, &feature.geometry, step)?;
            series.source = Some(name.clone());
            let knicks = detect_knickpoints(&series, config.window_m, config.min_drop_m)?;
            run.report.knickpoints += knicks.len();
            stage.write(&run.out(&format!("profile_{name}.csv")), csv_table_string(&series.samples)?.as_bytes())?;
            stage.write(&run.out(&format!("knickpoints_{name}.csv")), csv_table_string(&knicks)?.as_bytes())?;
            if config.png {
                stage.write(&run.out(&format!("profile_{name}.png")), &render_profile(&series, &knicks)?)?;
            }
        }
        run.commit(stage);
    }

    if let Some(seed) = config.lake_seed {
        let mut stage = Stage::new();
        let lake = match (config.lake_pour, &containment) {
            (Some(pour), _) => fill_lake(&dem, seed, pour)?,
            (None, Some(layer)) => {
                let feature = layer
                    .features
                    .first()
                    .ok_or_else(|| CliError::Usage("containment layer is empty".into()))?;
                find_pour_elevation(&dem, seed, &feature.geometry)?
            }
            (None, None) => unreachable!("checked when the config was parsed"),
        };
        run.report.lake_area_m2 = Some(lake.area_m2);
        run.raster(&mut stage, "lake_mask", &lake.mask_raster(), Some("categorical"))?;
        let log = [LakeScenario::new(&config.lake_label, seed, &lake)];
        stage.write(&run.out("lake_scenarios.csv"), csv_table_string(&log)?.as_bytes())?;
        run.commit(stage);
    }

    Ok(run.report)
}
