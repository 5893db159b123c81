//! Elevation profiles along polylines and split-window knickpoint detection.

use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::raster::Raster;
use crate::vector_io::{CsvRecord, CsvValue, GeoPoint, Geometry};

pub const DEFAULT_WINDOW_M: f64 = 20.0;
pub const DEFAULT_MIN_DROP_M: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile line must be a polyline")]
    NotPolyline,
    #[error("profile line has zero length")]
    ZeroLength,
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("window {window} m must be at least twice the step of {step} m")]
    WindowTooSmall { window: f64, step: f64 },
    #[error("minimum drop must be positive, got {0}")]
    BadMinDrop(f64),
    #[error("profile of {length} m is shorter than two windows of {window} m")]
    TooShort { length: f64, window: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub distance: f64,
    pub x: f64,
    pub y: f64,
    /// `None` off-grid or next to nodata.
    pub elevation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSeries {
    pub samples: Vec<ProfileSample>,
    pub step: f64,
    pub source: Option<String>,
}

impl ProfileSeries {
    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.distance)
    }
}

/// Bilinear interpolation between the four surrounding cell centers.
pub fn bilinear(dem: &Raster, x: f64, y: f64) -> Option<f64> {
    let spec = dem.spec();
    if spec.ncols < 2 || spec.nrows < 2 {
        return None;
    }
    let fc = (x - spec.xll) / spec.cellsize - 0.5;
    let fr = (spec.top() - y) / spec.cellsize - 0.5;
    let (maxc, maxr) = ((spec.ncols - 1) as f64, (spec.nrows - 1) as f64);
    if !(0.0..=maxc).contains(&fc) || !(0.0..=maxr).contains(&fr) {
        return None;
    }
    let c0 = (fc.floor() as usize).min(spec.ncols - 2);
    let r0 = (fr.floor() as usize).min(spec.nrows - 2);
    let (tx, ty) = (fc - c0 as f64, fr - r0 as f64);
    let z00 = dem.value(r0, c0)?;
    let z01 = dem.value(r0, c0 + 1)?;
    let z10 = dem.value(r0 + 1, c0)?;
    let z11 = dem.value(r0 + 1, c0 + 1)?;
    let top = z00 + (z01 - z00) * tx;
    let bottom = z10 + (z11 - z10) * tx;
    Some(top + (bottom - top) * ty)
}

/// Samples at every multiple of `step` along the line plus its endpoint.
pub fn sample_profile(dem: &Raster, line: &Geometry, step: f64) -> Result<ProfileSeries, ProfileError> {
    let Geometry::Polyline(path) = line else {
        return Err(ProfileError::NotPolyline);
    };
    if !(step > 0.0 && step.is_finite()) {
        return Err(ProfileError::BadStep(step));
    }
    let cumulative: Vec<f64> = std::iter::once(0.0)
        .chain(path.windows(2).scan(0.0, |acc, w| {
            *acc += w[0].distance(&w[1]);
            Some(*acc)
        }))
        .collect();
    let length = *cumulative.last().unwrap_or(&0.0);
    if length.is_nan() || length <= 0.0 {
        return Err(ProfileError::ZeroLength);
    }

    let mut distances: Vec<f64> = (0..).map(|k| k as f64 * step).take_while(|&d| d < length).collect();
    if length - distances[distances.len() - 1] <= 1e-9 * step {
        distances.pop();
    }
    distances.push(length);

    let mut seg = 0;
    let samples = distances
        .into_iter()
        .map(|d| {
            while seg + 2 < cumulative.len() && cumulative[seg + 1] <= d {
                seg += 1;
            }
            let p = point_on_segment(path[seg], path[seg + 1], cumulative[seg], cumulative[seg + 1], d);
            ProfileSample {
                distance: d,
                x: p.x,
                y: p.y,
                elevation: bilinear(dem, p.x, p.y),
            }
        })
        .collect();
    Ok(ProfileSeries {
        samples,
        step,
        source: None,
    })
}

fn point_on_segment(a: GeoPoint, b: GeoPoint, da: f64, db: f64, d: f64) -> GeoPoint {
    if db <= da {
        return a;
    }
    let t = ((d - da) / (db - da)).clamp(0.0, 1.0);
    GeoPoint::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knickpoint {
    pub distance: f64,
    /// Upstream mean minus downstream mean.
    pub drop: f64,
    pub upstream_mean: f64,
    pub downstream_mean: f64,
    pub window: f64,
}

fn mean_of(samples: &[ProfileSample]) -> Option<f64> {
    let mut sum = CompensatedSum::new();
    for s in samples {
        sum.add(s.elevation?);
    }
    Some(sum.total() / samples.len() as f64)
}

/// Split-window test: at each sample compare the mean elevation over the
/// `window` before it with the mean over the `window` after it.
///
/// Only samples with both windows complete and free of nodata are scored.
/// Local maxima of `|drop| >= min_drop` survive non-maximum suppression
/// within `window`; the result is ordered by distance.
pub fn detect_knickpoints(profile: &ProfileSeries, window: f64, min_drop: f64) -> Result<Vec<Knickpoint>, ProfileError> {
    let step = profile.step;
    if window.is_nan() || window < 2.0 * step {
        return Err(ProfileError::WindowTooSmall { window, step });
    }
    if min_drop.is_nan() || min_drop <= 0.0 {
        return Err(ProfileError::BadMinDrop(min_drop));
    }
    let length = profile.length();
    if length < 2.0 * window {
        return Err(ProfileError::TooShort { length, window });
    }

    let samples = &profile.samples;
    let n = samples.len();
    let m = (window / step + 1e-9).floor() as usize;
    let regular = match n {
        0 | 1 => n,
        _ if (samples[n - 1].distance - samples[n - 2].distance - step).abs() <= 1e-9 * step => n,
        _ => n - 1,
    };

    let scored: Vec<Option<Knickpoint>> = (0..n)
        .map(|i| {
            if i < m || i + m >= regular {
                return None;
            }
            let up = mean_of(&samples[i - m..i])?;
            let down = mean_of(&samples[i + 1..=i + m])?;
            Some(Knickpoint {
                distance: samples[i].distance,
                drop: up - down,
                upstream_mean: up,
                downstream_mean: down,
                window,
            })
        })
        .collect();

    let magnitude = |i: usize| scored[i].map_or(0.0, |k| k.drop.abs());
    let mut candidates: Vec<Knickpoint> = (0..n)
        .filter_map(|i| {
            let k = scored[i]?;
            let a = k.drop.abs();
            let left = i.checked_sub(1).map_or(0.0, magnitude);
            let right = if i + 1 < n { magnitude(i + 1) } else { 0.0 };
            (a >= min_drop && a >= left && a >= right).then_some(k)
        })
        .collect();
    candidates.sort_by(|a, b| b.drop.abs().total_cmp(&a.drop.abs()).then(a.distance.total_cmp(&b.distance)));

    let mut kept: Vec<Knickpoint> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| (k.distance - c.distance).abs() > window) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    Ok(kept)
}

impl CsvRecord for ProfileSample {
    fn header() -> Vec<&'static str> {
        vec!["distance_m", "x", "y", "elevation_m"]
    }

    fn values(&self) -> Vec<CsvValue> {
        vec![self.distance.into(), self.x.into(), self.y.into(), self.elevation.into()]
    }
}

impl CsvRecord for Knickpoint {
    fn header() -> Vec<&'static str> {
        vec!["distance_m", "drop_m", "upstream_mean_m", "downstream_mean_m"]
    }

    fn values(&self) -> Vec<CsvValue> {
        vec![
            self.distance.into(),
            self.drop.into(),
            self.upstream_mean.into(),
            self.downstream_mean.into(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::Executor;
    use crate::raster::{GridSpec, RasterKind};

    fn line(points: &[(f64, f64)]) -> Geometry {
        Geometry::Polyline(points.iter().map(|&(x, y)| GeoPoint::new(x, y)).collect())
    }

    fn plane_dem() -> Raster {
        let spec = GridSpec::new(20, 20, 0.0, 0.0, 1.0).unwrap();
        Raster::from_fn(spec, RasterKind::Continuous, &Executor::sequential(), |x, _| x).unwrap()
    }

    fn series(elevations: &[f64], step: f64) -> ProfileSeries {
        ProfileSeries {
            samples: elevations
                .iter()
                .enumerate()
                .map(|(i, &z)| ProfileSample {
                    distance: i as f64 * step,
                    x: i as f64 * step,
                    y: 0.0,
                    elevation: Some(z),
                })
                .collect(),
            step,
            source: None,
        }
    }

    #[test]
    fn sample_distances() {
        let p = sample_profile(&plane_dem(), &line(&[(2.0, 5.0), (12.0, 5.0)]), 2.0).unwrap();
        let d: Vec<f64> = p.samples.iter().map(|s| s.distance).collect();
        assert_eq!(d, vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let q = sample_profile(&plane_dem(), &line(&[(2.0, 5.0), (5.0, 5.0)]), 2.0).unwrap();
        let d: Vec<f64> = q.samples.iter().map(|s| s.distance).collect();
        assert_eq!(d, vec![0.0, 2.0, 3.0]);
    }

    #[test]
    fn plane_is_exact() {
        let p = sample_profile(&plane_dem(), &line(&[(1.0, 3.0), (6.0, 3.0), (18.5, 3.0)]), 0.7).unwrap();
        for s in &p.samples {
            assert!((s.elevation.unwrap() - (1.0 + s.distance)).abs() < 1e-9);
        }
    }

    #[test]
    fn off_grid_is_none() {
        let p = sample_profile(&plane_dem(), &line(&[(0.1, 3.0), (30.0, 3.0)]), 1.0).unwrap();
        assert_eq!(p.samples[0].elevation, None);
        assert!(p.samples[1].elevation.is_some());
        assert_eq!(p.samples.last().unwrap().elevation, None);
    }

    #[test]
    fn sampling_errors() {
        let dem = plane_dem();
        assert!(matches!(sample_profile(&dem, &line(&[(1.0, 1.0), (1.0, 1.0)]), 1.0), Err(ProfileError::ZeroLength)));
        assert!(matches!(sample_profile(&dem, &line(&[(1.0, 1.0), (2.0, 1.0)]), 0.0), Err(ProfileError::BadStep(_))));
        assert!(matches!(
            sample_profile(&dem, &Geometry::Point(GeoPoint::new(1.0, 1.0)), 1.0),
            Err(ProfileError::NotPolyline)
        ));
    }

    #[test]
    fn step_is_detected() {
        let z: Vec<f64> = (0..=200).map(|i| if i < 100 { 120.0 } else { 119.0 }).collect();
        let k = detect_knickpoints(&series(&z, 1.0), 20.0, 0.5).unwrap();
        assert_eq!(k.len(), 1);
        assert!((k[0].distance - 100.0).abs() <= 2.0);
        assert!((k[0].drop - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_and_short_profiles() {
        let z: Vec<f64> = (0..=200).map(|i| 150.0 - 0.01 * i as f64).collect();
        assert!(detect_knickpoints(&series(&z, 1.0), 20.0, 1.0).unwrap().is_empty());
        assert!(matches!(detect_knickpoints(&series(&z[..30], 1.0), 20.0, 1.0), Err(ProfileError::TooShort { .. })));
        assert!(matches!(detect_knickpoints(&series(&z, 1.0), 1.0, 1.0), Err(ProfileError::WindowTooSmall { .. })));
        assert!(matches!(detect_knickpoints(&series(&z, 1.0), 20.0, 0.0), Err(ProfileError::BadMinDrop(_))));
    }

    #[test]
    fn nodata_windows_are_skipped() {
        let mut s = series(&(0..=200).map(|i| if i < 100 { 120.0 } else { 119.0 }).collect::<Vec<_>>(), 1.0);
        s.samples[90].elevation = None;
        let k = detect_knickpoints(&s, 20.0, 0.5).unwrap();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0].distance, 90.0);
    }
}
