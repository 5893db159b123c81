//! Named raster kernels behind one trait, so front-ends can pick a product
//! by name at runtime.

use std::collections::BTreeMap;

use super::{
    aspect, hillshade, hypsometric_classes, reclass_aspect_8, reclass_exposure_4, slope, MorphError,
    DEFAULT_FLAT_THRESHOLD,
};
use crate::parallel::Executor;
use crate::raster::{Raster, RasterKind};

/// A raster-to-raster product.
pub trait TerrainKernel: Send + Sync {
    fn name(&self) -> &'static str;
    fn output_kind(&self) -> RasterKind;
    fn apply(&self, input: &Raster, exec: &Executor) -> Result<Raster, MorphError>;
}

/// String parameters, typically straight from CLI flags or a config section.
#[derive(Debug, Clone, Default)]
pub struct KernelParams(BTreeMap<String, String>);

impl KernelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, MorphError> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s.trim().parse().map_err(|_| MorphError::BadParameter {
                key: key.to_string(),
                message: format!("'{s}' is not a number"),
            }),
        }
    }

    /// Comma-separated numbers.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, MorphError> {
        let Some(s) = self.get(key) else {
            return Ok(None);
        };
        s.split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| MorphError::BadParameter {
                    key: key.to_string(),
                    message: format!("'{t}' is not a number"),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

impl<K: ToString, V: ToString> FromIterator<(K, V)> for KernelParams {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        KernelParams(iter.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
    }
}

pub type KernelFactory = fn(&KernelParams) -> Result<Box<dyn TerrainKernel>, MorphError>;

struct SlopeKernel {
    flat_threshold: f64,
}

impl TerrainKernel for SlopeKernel {
    fn name(&self) -> &'static str {
        "slope"
    }
    fn output_kind(&self) -> RasterKind {
        RasterKind::Continuous
    }
    fn apply(&self, dem: &Raster, exec: &Executor) -> Result<Raster, MorphError> {
        slope(dem, self.flat_threshold, exec)
    }
}

struct AspectKernel {
    flat_threshold: f64,
}

impl TerrainKernel for AspectKernel {
    fn name(&self) -> &'static str {
        "aspect"
    }
    fn output_kind(&self) -> RasterKind {
        RasterKind::Continuous
    }
    fn apply(&self, dem: &Raster, exec: &Executor) -> Result<Raster, MorphError> {
        aspect(dem, self.flat_threshold, exec)
    }
}

struct HillshadeKernel {
    azimuth: f64,
    altitude: f64,
}

impl TerrainKernel for HillshadeKernel {
    fn name(&self) -> &'static str {
        "hillshade"
    }
    fn output_kind(&self) -> RasterKind {
        RasterKind::Continuous
    }
    fn apply(&self, dem: &Raster, exec: &Executor) -> Result<Raster, MorphError> {
        hillshade(dem, self.azimuth, self.altitude, exec)
    }
}

/// Input: aspect degrees.
struct Aspect8Kernel;

impl TerrainKernel for Aspect8Kernel {
    fn name(&self) -> &'static str {
        "aspect8"
    }
    fn output_kind(&self) -> RasterKind {
        RasterKind::Categorical
    }
    fn apply(&self, aspect: &Raster, _: &Executor) -> Result<Raster, MorphError> {
        reclass_aspect_8(aspect)
    }
}

/// Input: aspect class codes.
struct Exposure4Kernel;

impl TerrainKernel for Exposure4Kernel {
    fn name(&self) -> &'static str {
        "exposure4"
    }
    fn output_kind(&self) -> RasterKind {
        RasterKind::Categorical
    }
    fn apply(&self, classes: &Raster, _: &Executor) -> Result<Raster, MorphError> {
        reclass_exposure_4(classes)
    }
}

struct HypsometryKernel {
    breaks: Vec<f64>,
}

impl TerrainKernel for HypsometryKernel {
    fn name(&self) -> &'static str {
        "hypsometry"
    }
    fn output_kind(&self) -> RasterKind {
        RasterKind::Categorical
    }
    fn apply(&self, dem: &Raster, _: &Executor) -> Result<Raster, MorphError> {
        hypsometric_classes(dem, &self.breaks)
    }
}

pub struct KernelRegistry {
    factories: BTreeMap<&'static str, (&'static str, KernelFactory)>,
}

impl KernelRegistry {
    pub fn empty() -> Self {
        KernelRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// All built-in kernels.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("slope", "slope in degrees (flat_threshold)", |p| {
            Ok(Box::new(SlopeKernel {
                flat_threshold: p.f64_or("flat_threshold", DEFAULT_FLAT_THRESHOLD)?,
            }))
        });
        r.register("aspect", "downslope azimuth, -1 on flats (flat_threshold)", |p| {
            Ok(Box::new(AspectKernel {
                flat_threshold: p.f64_or("flat_threshold", DEFAULT_FLAT_THRESHOLD)?,
            }))
        });
        r.register("hillshade", "shaded relief 0-255 (azimuth, altitude)", |p| {
            Ok(Box::new(HillshadeKernel {
                azimuth: p.f64_or("azimuth", 315.0)?,
                altitude: p.f64_or("altitude", 45.0)?,
            }))
        });
        r.register("aspect8", "aspect degrees to 8 compass classes", |_| Ok(Box::new(Aspect8Kernel)));
        r.register("exposure4", "aspect classes to 4 exposure groups", |_| Ok(Box::new(Exposure4Kernel)));
        r.register("hypsometry", "elevation bands (breaks=a,b,...)", |p| {
            let breaks = p.f64_list("breaks")?.ok_or_else(|| MorphError::BadParameter {
                key: "breaks".into(),
                message: "required".into(),
            })?;
            Ok(Box::new(HypsometryKernel { breaks }))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, description: &'static str, factory: KernelFactory) {
        self.factories.insert(name, (description, factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn describe(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.factories.iter().map(|(k, (d, _))| (*k, *d))
    }

    pub fn create(&self, name: &str, params: &KernelParams) -> Result<Box<dyn TerrainKernel>, MorphError> {
        let (_, factory) = self.factories.get(name).ok_or_else(|| MorphError::UnknownKernel {
            name: name.to_string(),
            available: self.names().collect::<Vec<_>>().join(", "),
        })?;
        factory(params)
    }
}

impl Default for KernelRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
