//! PNG rendering of rasters and profiles.

use std::collections::BTreeMap;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use morphokit::profile::{Knickpoint, ProfileSeries};
use morphokit::raster::Raster;

use crate::error::{CliError, CliResult};

pub type Rgba = [u8; 4];

pub const TRANSPARENT: Rgba = [0, 0, 0, 0];

/// Maps a cell value to a color, given the valid value range of the raster.
pub trait Colormap: Send + Sync {
    fn name(&self) -> &'static str;
    fn color(&self, value: f64, min: f64, max: f64) -> Rgba;
}

fn unit(value: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((value - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

fn lerp_stops(stops: &[(f64, [u8; 3])], t: f64) -> Rgba {
    let k = stops.windows(2).position(|w| t <= w[1].0).unwrap_or(stops.len() - 2);
    let ((t0, c0), (t1, c1)) = (stops[k], stops[k + 1]);
    let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * s).round() as u8;
    [mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2]), 255]
}

/// Green lowlands through tan and brown to near-white tops.
pub struct Terrain;

impl Colormap for Terrain {
    fn name(&self) -> &'static str {
        "terrain"
    }
    fn color(&self, value: f64, min: f64, max: f64) -> Rgba {
        const STOPS: [(f64, [u8; 3]); 5] = [
            (0.0, [0, 97, 71]),
            (0.25, [16, 122, 47]),
            (0.5, [232, 215, 125]),
            (0.75, [161, 67, 0]),
            (1.0, [240, 240, 240]),
        ];
        lerp_stops(&STOPS, unit(value, min, max))
    }
}

pub struct Gray;

impl Colormap for Gray {
    fn name(&self) -> &'static str {
        "gray"
    }
    fn color(&self, value: f64, min: f64, max: f64) -> Rgba {
        let g = (unit(value, min, max) * 255.0).round() as u8;
        [g, g, g, 255]
    }
}

/// Fixed palette indexed by the rounded class code.
pub struct Categorical;

const PALETTE: [[u8; 3]; 12] = [
    [200, 200, 200],
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [188, 189, 34],
    [23, 190, 207],
    [127, 127, 127],
    [255, 187, 120],
];

impl Colormap for Categorical {
    fn name(&self) -> &'static str {
        "categorical"
    }
    fn color(&self, value: f64, _: f64, _: f64) -> Rgba {
        let [r, g, b] = PALETTE[(value.round() as i64).rem_euclid(PALETTE.len() as i64) as usize];
        [r, g, b, 255]
    }
}

pub struct ColormapRegistry {
    maps: BTreeMap<&'static str, Box<dyn Colormap>>,
}

impl ColormapRegistry {
    pub fn builtin() -> Self {
        let mut r = ColormapRegistry { maps: BTreeMap::new() };
        r.register(Box::new(Terrain));
        r.register(Box::new(Gray));
        r.register(Box::new(Categorical));
        r
    }

    pub fn register(&mut self, map: Box<dyn Colormap>) {
        self.maps.insert(map.name(), map);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.maps.keys().copied()
    }

    pub fn get(&self, name: &str) -> CliResult<&dyn Colormap> {
        self.maps.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown colormap '{name}' (available: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

/// RGBA pixel buffer, row-major from the top.
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: u32, height: u32, fill: Rgba) -> Self {
        Canvas {
            width,
            height,
            pixels: fill.repeat((width * height) as usize),
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgba {
        let i = 4 * (y * self.width + x) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2], self.pixels[i + 3]]
    }

    pub fn set(&mut self, x: i64, y: i64, c: Rgba) {
        if x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64 {
            let i = 4 * (y as usize * self.width as usize + x as usize);
            self.pixels[i..i + 4].copy_from_slice(&c);
        }
    }

    pub fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: Rgba) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    /// Draws `text` with the built-in 3x5 font, top-left at `(x, y)`.
    pub fn text(&mut self, x: i64, y: i64, text: &str, scale: i64, c: Rgba) {
        for (k, ch) in text.chars().enumerate() {
            let rows = glyph(ch);
            let ox = x + k as i64 * 4 * scale;
            for (r, bits) in rows.iter().enumerate() {
                for col in 0..3 {
                    if bits & (0b100 >> col) != 0 {
                        for dy in 0..scale {
                            for dx in 0..scale {
                                self.set(ox + col * scale + dx, y + r as i64 * scale + dy, c);
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn to_png(&self) -> CliResult<Vec<u8>> {
        let mut out = Vec::new();
        PngEncoder::new(&mut out)
            .write_image(&self.pixels, self.width, self.height, ExtendedColorType::Rgba8)
            .map_err(|e| CliError::Image(e.to_string()))?;
        Ok(out)
    }
}

pub fn text_width(text: &str, scale: i64) -> i64 {
    (text.chars().count() as i64 * 4 - 1).max(0) * scale
}

fn glyph(c: char) -> [u8; 5] {
    match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b001, 0b001, 0b001],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0, 0, 0, 0, 0b010],
        '-' => [0, 0, 0b111, 0, 0],
        '(' => [0b001, 0b010, 0b010, 0b010, 0b001],
        ')' => [0b100, 0b010, 0b010, 0b010, 0b100],
        'a' => [0, 0b011, 0b101, 0b101, 0b011],
        'c' => [0, 0b011, 0b100, 0b100, 0b011],
        'd' => [0b001, 0b011, 0b101, 0b101, 0b011],
        'e' => [0, 0b111, 0b111, 0b100, 0b011],
        'i' => [0b010, 0, 0b010, 0b010, 0b010],
        'l' => [0b010, 0b010, 0b010, 0b010, 0b010],
        'm' => [0, 0b111, 0b111, 0b101, 0b101],
        'n' => [0, 0b110, 0b101, 0b101, 0b101],
        'o' => [0, 0b010, 0b101, 0b101, 0b010],
        's' => [0, 0b011, 0b110, 0b011, 0b110],
        't' => [0b010, 0b111, 0b010, 0b010, 0b001],
        'v' => [0, 0b101, 0b101, 0b101, 0b010],
        _ => [0; 5],
    }
}

/// One pixel per cell; nodata is transparent.
pub fn render_raster(raster: &Raster, map: &dyn Colormap) -> CliResult<Vec<u8>> {
    let (min, max) = raster
        .valid_values()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let mut canvas = Canvas::new(raster.ncols() as u32, raster.nrows() as u32, TRANSPARENT);
    for row in 0..raster.nrows() {
        for col in 0..raster.ncols() {
            if let Some(v) = raster.value(row, col) {
                canvas.set(col as i64, row as i64, map.color(v, min, max));
            }
        }
    }
    canvas.to_png()
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
pub fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let pow = 10f64.powf(raw.log10().floor());
    let m = raw / pow;
    let k = if m < 1.5 {
        1.0
    } else if m < 3.5 {
        2.0
    } else if m < 7.5 {
        5.0
    } else {
        10.0
    };
    k * pow
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10()).ceil() as usize };
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

const PLOT_W: u32 = 800;
const PLOT_H: u32 = 400;
const WHITE: Rgba = [255, 255, 255, 255];
const BLACK: Rgba = [0, 0, 0, 255];
const GRID: Rgba = [225, 225, 225, 255];
const LINE: Rgba = [31, 119, 180, 255];
const MARK: Rgba = [214, 39, 40, 255];

/// Distance-elevation plot with labelled axes; knickpoints are marked.
pub fn render_profile(series: &ProfileSeries, knickpoints: &[Knickpoint]) -> CliResult<Vec<u8>> {
    let (left, right, top, bottom) = (70i64, 20i64, 30i64, 50i64);
    let (pw, ph) = (PLOT_W as i64 - left - right, PLOT_H as i64 - top - bottom);
    let mut canvas = Canvas::new(PLOT_W, PLOT_H, WHITE);

    let length = series.length().max(f64::MIN_POSITIVE);
    let (mut zmin, mut zmax) = series
        .samples
        .iter()
        .filter_map(|s| s.elevation)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| (lo.min(z), hi.max(z)));
    if !zmin.is_finite() {
        (zmin, zmax) = (0.0, 1.0);
    }
    if zmax - zmin < 1e-9 {
        (zmin, zmax) = (zmin - 1.0, zmax + 1.0);
    }
    let px = |d: f64| left + ((d / length) * pw as f64).round() as i64;
    let py = |z: f64| top + ph - (((z - zmin) / (zmax - zmin)) * ph as f64).round() as i64;

    let xstep = nice_step(length, 8.0);
    let mut d = 0.0;
    while d <= length + 1e-9 {
        let x = px(d);
        canvas.line((x, top), (x, top + ph), GRID);
        canvas.line((x, top + ph), (x, top + ph + 4), BLACK);
        let label = tick_label(d, xstep);
        canvas.text(x - text_width(&label, 2) / 2, top + ph + 8, &label, 2, BLACK);
        d += xstep;
    }
    let ystep = nice_step(zmax - zmin, 6.0);
    let mut z = (zmin / ystep).ceil() * ystep;
    while z <= zmax + 1e-9 {
        let y = py(z);
        canvas.line((left, y), (left + pw, y), GRID);
        canvas.line((left - 4, y), (left, y), BLACK);
        let label = tick_label(z, ystep);
        canvas.text(left - 8 - text_width(&label, 2), y - 5, &label, 2, BLACK);
        z += ystep;
    }
    canvas.line((left, top), (left, top + ph), BLACK);
    canvas.line((left, top + ph), (left + pw, top + ph), BLACK);

    for k in knickpoints {
        canvas.line((px(k.distance), top), (px(k.distance), top + ph), MARK);
    }
    for w in series.samples.windows(2) {
        if let (Some(z0), Some(z1)) = (w[0].elevation, w[1].elevation) {
            canvas.line((px(w[0].distance), py(z0)), (px(w[1].distance), py(z1)), LINE);
        }
    }

    let xlabel = "distance (m)";
    canvas.text(left + pw / 2 - text_width(xlabel, 2) / 2, PLOT_H as i64 - 18, xlabel, 2, BLACK);
    canvas.text(8, 8, "elevation (m)", 2, BLACK);
    canvas.to_png()
}

#[cfg(test)]
mod tests {
    use super::*;
    use morphokit::raster::{GridSpec, RasterKind};

    fn decode(png: &[u8]) -> image::RgbaImage {
        image::load_from_memory_with_format(png, image::ImageFormat::Png).unwrap().to_rgba8()
    }

    #[test]
    fn single_cell_is_one_opaque_pixel() {
        let spec = GridSpec::new(1, 1, 0.0, 0.0, 1.0).unwrap();
        let r = Raster::filled(spec, 42.0, RasterKind::Continuous).unwrap();
        let img = decode(&render_raster(&r, &Terrain).unwrap());
        assert_eq!(img.dimensions(), (1, 1));
        assert_eq!(img.get_pixel(0, 0).0[3], 255);
    }

    #[test]
    fn categorical_uses_at_most_nine_colors() {
        let spec = GridSpec::new(9, 3, 0.0, 0.0, 1.0).unwrap();
        let values = (0..27).map(|i| if i % 9 == 0 { spec.nodata } else { (i % 9) as f64 }).collect();
        let r = Raster::new(spec, values, RasterKind::Categorical).unwrap();
        let img = decode(&render_raster(&r, &Categorical).unwrap());
        let mut colors: Vec<[u8; 4]> = img.pixels().map(|p| p.0).collect();
        colors.sort();
        colors.dedup();
        assert_eq!(colors.len(), 9);
        assert!(colors.contains(&TRANSPARENT));
    }

    #[test]
    fn constant_raster_is_uniform() {
        let spec = GridSpec::new(4, 4, 0.0, 0.0, 1.0).unwrap();
        let mut values = vec![7.5; 16];
        values[5] = spec.nodata;
        let r = Raster::new(spec, values, RasterKind::Continuous).unwrap();
        for map in ColormapRegistry::builtin().names() {
            let img = decode(&render_raster(&r, ColormapRegistry::builtin().get(map).unwrap()).unwrap());
            let mut colors: Vec<[u8; 4]> = img.pixels().map(|p| p.0).filter(|c| c[3] == 255).collect();
            colors.dedup();
            assert_eq!(colors.len(), 1, "{map}");
        }
    }

    #[test]
    fn registry_lookup() {
        let reg = ColormapRegistry::builtin();
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["categorical", "gray", "terrain"]);
        assert!(reg.get("viridis").is_err());
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(1000.0, 8.0), 100.0);
        assert_eq!(nice_step(30.0, 6.0), 5.0);
        assert_eq!(nice_step(2.0, 6.0), 0.2);
        assert_eq!(nice_step(3.0, 6.0), 0.5);
        assert_eq!(tick_label(-0.0, 0.5), "0.0");
        assert_eq!(tick_label(131.5, 0.5), "131.5");
    }

    #[test]
    fn font_covers_axis_text() {
        for c in "0123456789.-() distance (m) elevation (m)".chars().filter(|c| *c != ' ') {
            assert_ne!(glyph(c), [0; 5], "{c}");
        }
    }
}
