//! Regenerates the bundled synthetic site under `fixtures/iarcuri`.
//!
//! ```text
//! cargo run -p morphokit-cli --example iarcuri_fixture [out_dir]
//! ```

use std::path::PathBuf;

use morphokit::synthetic::iarcuri_like;
use morphokit::vector_io::write_vector_layer;

const CONFIG: &str = "\
# Synthetic three-interfluve site with four nested enclosures.
[inputs]
contours = contours.geojson
spot_heights = spot_heights.geojson
zones = enclosures.geojson
profiles = profiles.geojson
lake_containment = lake_containment.geojson

[grid]
cellsize = 2
bounds = 0,0,1400,1000

[tin]
flat_tolerance = 1e-6
repair = true

[morphometry]
flat_threshold = 1e-8
hillshade_azimuth = 315
hillshade_altitude = 45
hypsometry_breaks = 135,140,145,150

[zonal]
histogram_bins = 12

[profile]
step = 2
window_m = 20
min_drop_m = 0.5

[lake]
seed = 925,450
label = behind_rampart

[output]
dir = out
workers = 0
png = true
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/iarcuri"));
    std::fs::create_dir_all(&dir)?;
    let site = iarcuri_like();
    write_vector_layer(&site.contours, dir.join("contours.geojson"))?;
    write_vector_layer(&site.spot_heights, dir.join("spot_heights.geojson"))?;
    write_vector_layer(&site.enclosures, dir.join("enclosures.geojson"))?;
    write_vector_layer(&site.profile_lines, dir.join("profiles.geojson"))?;
    write_vector_layer(&site.lake_containment, dir.join("lake_containment.geojson"))?;
    std::fs::write(dir.join("site.conf"), CONFIG)?;
    println!("{}: {} contours, {} spot heights", dir.display(), site.contours.len(), site.spot_heights.len());
    Ok(())
}
