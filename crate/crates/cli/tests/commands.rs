use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/iarcuri").join(name)
}

fn morphokit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphokit")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = morphokit(args);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {stderr}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "summary should be one line: {stdout}");
    stdout
}

fn code(args: &[&str]) -> (i32, String) {
    let out = morphokit(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A 10 m DEM of the bundled site, plus slope and aspect.
fn coarse_site(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let (dem, slope, aspect) = (dir.join("dem.asc"), dir.join("slope.asc"), dir.join("aspect.asc"));
    ok(&[
        "build-dem",
        "--contours",
        s(&fixture("contours.geojson")),
        "--spot-heights",
        s(&fixture("spot_heights.geojson")),
        "--cellsize",
        "10",
        "--out",
        s(&dem),
    ]);
    ok(&["slope", "--dem", s(&dem), "--out", s(&slope)]);
    ok(&["aspect", "--dem", s(&dem), "--out", s(&aspect), "--workers", "2"]);
    (dem, slope, aspect)
}

#[test]
fn build_dem_writes_requested_cellsize() {
    let tmp = TempDir::new().unwrap();
    let dem = tmp.path().join("dem.asc");
    let summary = ok(&["build-dem", "--contours", s(&fixture("contours.geojson")), "--cellsize", "2", "--out", s(&dem)]);
    assert!(summary.contains("flat triangles"));
    let text = fs::read_to_string(&dem).unwrap();
    let header: Vec<&str> = text.lines().take(6).collect();
    assert_eq!(header[4], "cellsize 2.0");
}

#[test]
fn zonal_table_has_one_row_per_zone_plus_entire_area() {
    let tmp = TempDir::new().unwrap();
    let (dem, slope, aspect) = coarse_site(tmp.path());
    let table = tmp.path().join("table.csv");
    ok(&[
        "zonal",
        "--dem",
        s(&dem),
        "--slope",
        s(&slope),
        "--aspect",
        s(&aspect),
        "--zones",
        s(&fixture("enclosures.geojson")),
        "--out",
        s(&table),
    ]);
    let text = fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 + 1);
    assert!(text.lines().last().unwrap().starts_with("entire_area,"));
}

#[test]
fn reclass_chain_and_render() {
    let tmp = TempDir::new().unwrap();
    let (dem, _, aspect) = coarse_site(tmp.path());
    let (a8, e4, hyp) = (tmp.path().join("a8.asc"), tmp.path().join("e4.asc"), tmp.path().join("h.asc"));
    ok(&["reclass", "--input", s(&aspect), "--scheme", "aspect8", "--out", s(&a8)]);
    ok(&["reclass", "--input", s(&a8), "--scheme", "exposure4", "--out", s(&e4)]);
    ok(&["reclass", "--input", s(&dem), "--scheme", "hypsometry", "--breaks", "135,145,155", "--out", s(&hyp)]);
    let png = tmp.path().join("a8.png");
    ok(&["render", "--raster", s(&a8), "--colormap", "categorical", "--out", s(&png)]);
    assert_eq!(&fs::read(&png).unwrap()[..8], b"\x89PNG\r\n\x1a\n");
    let (c, err) = code(&["reclass", "--input", s(&dem), "--scheme", "hypsometry", "--out", s(&hyp)]);
    assert_eq!(c, 2, "{err}");
    let (c, err) = code(&["render", "--raster", s(&dem), "--colormap", "viridis", "--out", s(&png)]);
    assert_eq!(c, 2, "{err}");
}

#[test]
fn histogram_by_bins_and_breaks() {
    let tmp = TempDir::new().unwrap();
    let (dem, _, _) = coarse_site(tmp.path());
    let out = tmp.path().join("h.csv");
    ok(&["hist", "--raster", s(&dem), "--bins", "5", "--out", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 + 2);
    let total: u64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    let header = fs::read_to_string(&dem).unwrap();
    let dim = |k: usize| header.lines().nth(k).unwrap().split_whitespace().nth(1).unwrap().parse::<u64>().unwrap();
    assert_eq!(total, dim(0) * dim(1));
    ok(&[
        "hist",
        "--raster",
        s(&dem),
        "--breaks",
        "140,150",
        "--zones",
        s(&fixture("enclosures.geojson")),
        "--feature",
        "enclosure_4",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&["hist", "--raster", s(&dem), "--out", s(&out)]).0, 2);
}

#[test]
fn profile_knick_and_plot() {
    let tmp = TempDir::new().unwrap();
    let (dem, _, _) = coarse_site(tmp.path());
    let (csv, png, knick) = (tmp.path().join("p.csv"), tmp.path().join("p.png"), tmp.path().join("k.csv"));
    ok(&[
        "profile",
        "--dem",
        s(&dem),
        "--line",
        s(&fixture("profiles.geojson")),
        "--feature",
        "valley_axis",
        "--step",
        "5",
        "--out",
        s(&csv),
        "--png",
        s(&png),
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "distance_m,x,y,elevation_m");
    assert_eq!(text.lines().count(), 1 + 960 / 5 + 1);
    ok(&["knick", "--profile", s(&csv), "--window", "30", "--min-drop", "0.5", "--out", s(&knick)]);
    let ktext = fs::read_to_string(&knick).unwrap();
    assert_eq!(ktext.lines().next().unwrap(), "distance_m,drop_m,upstream_mean_m,downstream_mean_m");
    ok(&["render", "--profile", s(&csv), "--knickpoints", s(&knick), "--out", s(&png)]);
    let (c, err) = code(&["knick", "--profile", s(&csv), "--window", "5", "--out", s(&knick)]);
    assert_eq!(c, 1, "{err}");
    assert!(err.starts_with("error: "));
}

#[test]
fn lake_by_pour_and_by_containment_share_a_log() {
    let tmp = TempDir::new().unwrap();
    let (dem, _, _) = coarse_site(tmp.path());
    let (mask, log) = (tmp.path().join("lake.asc"), tmp.path().join("lakes.csv"));
    ok(&["lake", "--dem", s(&dem), "--seed", "925,450", "--pour", "135.5", "--out", s(&mask), "--log", s(&log)]);
    ok(&[
        "lake",
        "--dem",
        s(&dem),
        "--seed",
        "925,450",
        "--containment",
        s(&fixture("lake_containment.geojson")),
        "--label",
        "searched",
        "--out",
        s(&mask),
        "--log",
        s(&log),
    ]);
    let text = fs::read_to_string(&log).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("searched,"));
    assert_eq!(code(&["lake", "--dem", s(&dem), "--seed", "925,450", "--out", s(&mask)]).0, 2);
    assert_eq!(code(&["lake", "--dem", s(&dem), "--seed", "5000,5000", "--pour", "1", "--out", s(&mask)]).0, 1);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&[]).0, 2);
    assert_eq!(code(&["frobnicate"]).0, 2);
    assert_eq!(code(&["slope", "--dem", "x.asc"]).0, 2);
    assert_eq!(morphokit(&["--help"]).status.code(), Some(0));
    let (c, err) = code(&["slope", "--dem", "/no/such/dem.asc", "--out", "/tmp/never.asc"]);
    assert_eq!(c, 1);
    assert_eq!(err.trim(), "error: input not found: /no/such/dem.asc");
}

#[test]
fn pipeline_checks_inputs_before_writing() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("site.conf");
    let contours = fixture("contours.geojson");
    fs::write(
        &config,
        format!("[inputs]\ncontours = {}\nzones = missing.geojson\n[output]\ndir = out\n", contours.display()),
    )
    .unwrap();
    let (c, err) = code(&["pipeline", "--config", s(&config)]);
    assert_eq!(c, 1);
    assert!(err.contains("missing.geojson"), "{err}");
    assert!(!tmp.path().join("out").exists());

    fs::write(&config, "[grid]\ncellsize = 2\ncolour = red\n").unwrap();
    let (c, err) = code(&["pipeline", "--config", s(&config)]);
    assert_eq!(c, 1);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn pipeline_rolls_back_a_failing_stage() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("site.conf");
    // The profile window is too small for the step, so the profile stage fails.
    fs::write(
        &config,
        format!(
            "[inputs]\ncontours = {}\nprofiles = {}\n[grid]\ncellsize = 10\n[profile]\nstep = 10\nwindow_m = 15\n[output]\ndir = out\npng = false\n",
            fixture("contours.geojson").display(),
            fixture("profiles.geojson").display()
        ),
    )
    .unwrap();
    assert_eq!(code(&["pipeline", "--config", s(&config)]).0, 1);
    let out = tmp.path().join("out");
    assert!(out.join("dem.asc").exists());
    assert!(out.join("slope.asc").exists());
    let leftovers: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("profile") || n.starts_with("knick") || n.contains(".partial"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}
