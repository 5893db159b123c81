//! Slope, aspect, aspect/exposure classes, hypsometric bands and shaded
//! relief from a DEM.
//!
//! Gradients use Horn's 3×3 weighted differences. Border cells and cells
//! with any nodata neighbour are nodata in every derivative product.

mod registry;

use thiserror::Error;

use crate::parallel::Executor;
use crate::raster::{Raster, RasterError, RasterKind};

pub use registry::{KernelFactory, KernelParams, KernelRegistry, TerrainKernel};

/// Gradient magnitudes below this (m/m) are flat: slope 0, aspect −1.
pub const DEFAULT_FLAT_THRESHOLD: f64 = 1e-8;
pub const FLAT_ASPECT: f64 = -1.0;

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("grid is {ncols}x{nrows}; 3x3 neighbourhoods need at least 3x3")]
    TooSmall { ncols: usize, nrows: usize },
    #[error("cell {index}: aspect {value} is outside [0, 360) and not flat")]
    InvalidAspect { index: usize, value: f64 },
    #[error("cell {index}: {value} is not an aspect class code")]
    InvalidClass { index: usize, value: f64 },
    #[error("class breaks must be non-empty and strictly ascending")]
    BadBreaks,
    #[error("sun altitude {0} must lie in (0, 90]")]
    BadAltitude(f64),
    #[error("nodata value -1 collides with the flat aspect marker")]
    NodataCollision,
    #[error("unknown kernel '{name}'; available: {available}")]
    UnknownKernel { name: String, available: String },
    #[error("parameter '{key}': {message}")]
    BadParameter { key: String, message: String },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Eight compass sectors plus flat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum AspectClass {
    Flat = 0,
    N = 1,
    NE = 2,
    E = 3,
    SE = 4,
    S = 5,
    SW = 6,
    W = 7,
    NW = 8,
}

impl AspectClass {
    pub const ALL: [AspectClass; 9] = [
        AspectClass::Flat,
        AspectClass::N,
        AspectClass::NE,
        AspectClass::E,
        AspectClass::SE,
        AspectClass::S,
        AspectClass::SW,
        AspectClass::W,
        AspectClass::NW,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<AspectClass> {
        AspectClass::ALL.get(code as usize).copied()
    }

    /// Class of an azimuth in degrees; `-1` is flat. 45° sectors centred on
    /// the compass points, closed at their lower bound.
    pub fn from_azimuth(azimuth: f64) -> Option<AspectClass> {
        if azimuth == FLAT_ASPECT {
            return Some(AspectClass::Flat);
        }
        if !(0.0..360.0).contains(&azimuth) {
            return None;
        }
        const UPPER: [(f64, AspectClass); 8] = [
            (22.5, AspectClass::N),
            (67.5, AspectClass::NE),
            (112.5, AspectClass::E),
            (157.5, AspectClass::SE),
            (202.5, AspectClass::S),
            (247.5, AspectClass::SW),
            (292.5, AspectClass::W),
            (337.5, AspectClass::NW),
        ];
        Some(
            UPPER
                .iter()
                .find(|(upper, _)| azimuth < *upper)
                .map_or(AspectClass::N, |&(_, class)| class),
        )
    }

    pub fn exposure(self) -> ExposureClass {
        match self {
            AspectClass::Flat => ExposureClass::Flat,
            AspectClass::S | AspectClass::SW => ExposureClass::Sunlit,
            AspectClass::W | AspectClass::SE => ExposureClass::SemiSunlit,
            AspectClass::E | AspectClass::NE => ExposureClass::SemiShaded,
            AspectClass::N | AspectClass::NW => ExposureClass::Shaded,
        }
    }
}

/// Insolation grouping of aspect classes.
///
/// NE sits in the semi-shaded group only; shaded is {N, NW}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ExposureClass {
    Flat = 0,
    Sunlit = 1,
    SemiSunlit = 2,
    SemiShaded = 3,
    Shaded = 4,
}

impl ExposureClass {
    pub fn code(self) -> u8 {
        self as u8
    }
}

fn require_3x3(dem: &Raster) -> Result<(), MorphError> {
    if dem.ncols() < 3 || dem.nrows() < 3 {
        return Err(MorphError::TooSmall {
            ncols: dem.ncols(),
            nrows: dem.nrows(),
        });
    }
    Ok(())
}

/// Horn gradient `(dz/dx, dz/dy)` with x east and y north, or `None` on the
/// border or next to nodata.
#[inline]
pub fn horn_gradient(dem: &Raster, row: usize, col: usize) -> Option<(f64, f64)> {
    let (ncols, nrows) = (dem.ncols(), dem.nrows());
    if row == 0 || col == 0 || row + 1 >= nrows || col + 1 >= ncols {
        return None;
    }
    let v = dem.values();
    let nodata = dem.nodata();
    let at = |r: usize, c: usize| v[r * ncols + c];
    let (a, b, c) = (at(row - 1, col - 1), at(row - 1, col), at(row - 1, col + 1));
    let (d, e, f) = (at(row, col - 1), at(row, col), at(row, col + 1));
    let (g, h, i) = (at(row + 1, col - 1), at(row + 1, col), at(row + 1, col + 1));
    if [a, b, c, d, e, f, g, h, i].contains(&nodata) {
        return None;
    }
    let cs = dem.spec().cellsize;
    let dzdx = ((c + 2.0 * f + i) - (a + 2.0 * d + g)) / (8.0 * cs);
    // Row 0 is north, so north minus south.
    let dzdy = ((a + 2.0 * b + c) - (g + 2.0 * h + i)) / (8.0 * cs);
    Some((dzdx, dzdy))
}

fn gradient_map<F>(dem: &Raster, exec: &Executor, kind: RasterKind, f: F) -> Raster
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    let spec = *dem.spec();
    let mut out = vec![spec.nodata; spec.len()];
    exec.for_each_row(&mut out, spec.ncols, |row, cells| {
        for (col, cell) in cells.iter_mut().enumerate() {
            if let Some((gx, gy)) = horn_gradient(dem, row, col) {
                *cell = f(gx, gy);
            }
        }
    });
    Raster::from_parts_unchecked(spec, out, kind)
}

/// Slope in degrees in [0, 90).
pub fn slope(dem: &Raster, flat_threshold: f64, exec: &Executor) -> Result<Raster, MorphError> {
    require_3x3(dem)?;
    Ok(gradient_map(dem, exec, RasterKind::Continuous, |gx, gy| {
        let m = gx.hypot(gy);
        if m < flat_threshold {
            0.0
        } else {
            m.atan().to_degrees()
        }
    }))
}

/// Downslope azimuth in degrees clockwise from north, in [0, 360); flat
/// cells are −1.
pub fn aspect(dem: &Raster, flat_threshold: f64, exec: &Executor) -> Result<Raster, MorphError> {
    require_3x3(dem)?;
    if dem.nodata() == FLAT_ASPECT {
        return Err(MorphError::NodataCollision);
    }
    Ok(gradient_map(dem, exec, RasterKind::Continuous, |gx, gy| {
        if gx.hypot(gy) < flat_threshold {
            return FLAT_ASPECT;
        }
        let mut az = (-gx).atan2(-gy).to_degrees();
        if az < 0.0 {
            az += 360.0;
        }
        if az >= 360.0 {
            az = 0.0;
        }
        az + 0.0
    }))
}

/// Lambertian shaded relief in [0, 255].
pub fn hillshade(dem: &Raster, sun_azimuth: f64, sun_altitude: f64, exec: &Executor) -> Result<Raster, MorphError> {
    require_3x3(dem)?;
    if !(sun_altitude > 0.0 && sun_altitude <= 90.0) {
        return Err(MorphError::BadAltitude(sun_altitude));
    }
    let (az, alt) = (sun_azimuth.to_radians(), sun_altitude.to_radians());
    let sun = [az.sin() * alt.cos(), az.cos() * alt.cos(), alt.sin()];
    Ok(gradient_map(dem, exec, RasterKind::Continuous, |gx, gy| {
        let norm = (gx * gx + gy * gy + 1.0).sqrt();
        let lit = (-gx * sun[0] - gy * sun[1] + sun[2]) / norm;
        (255.0 * lit).clamp(0.0, 255.0)
    }))
}

fn map_cells<F>(input: &Raster, kind: RasterKind, f: F) -> Result<Raster, MorphError>
where
    F: Fn(usize, f64) -> Result<f64, MorphError>,
{
    let nodata = input.nodata();
    let values = input
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if v == nodata { Ok(v) } else { f(i, v) })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Raster::new(*input.spec(), values, kind)?)
}

/// Aspect degrees to [`AspectClass`] codes.
pub fn reclass_aspect_8(aspect: &Raster) -> Result<Raster, MorphError> {
    map_cells(aspect, RasterKind::Categorical, |index, value| {
        AspectClass::from_azimuth(value)
            .map(|c| c.code() as f64)
            .ok_or(MorphError::InvalidAspect { index, value })
    })
}

/// Aspect class codes to [`ExposureClass`] codes.
pub fn reclass_exposure_4(classes: &Raster) -> Result<Raster, MorphError> {
    map_cells(classes, RasterKind::Categorical, |index, value| {
        let class = (value.fract() == 0.0 && (0.0..=8.0).contains(&value))
            .then(|| AspectClass::from_code(value as u8))
            .flatten()
            .ok_or(MorphError::InvalidClass { index, value })?;
        Ok(class.exposure().code() as f64)
    })
}

/// Elevation bands: class `i` holds `[breaks[i-1], breaks[i])`, with open
/// classes below the first and from the last break up.
pub fn hypsometric_classes(dem: &Raster, breaks: &[f64]) -> Result<Raster, MorphError> {
    if breaks.is_empty() || breaks.windows(2).any(|w| w[0] >= w[1] || w[0].is_nan()) || breaks.iter().any(|b| !b.is_finite()) {
        return Err(MorphError::BadBreaks);
    }
    map_cells(dem, RasterKind::Categorical, |_, v| Ok(breaks.partition_point(|b| *b <= v) as f64))
}
