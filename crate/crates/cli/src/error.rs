use std::io;
use std::path::PathBuf;

use morphokit::hydro::HydroError;
use morphokit::morphometry::MorphError;
use morphokit::profile::ProfileError;
use morphokit::raster::RasterError;
use morphokit::tin::TinError;
use morphokit::vector_io::VectorError;
use morphokit::zonal::ZonalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("input not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: Box<CliError>,
    },
    #[error("png encoding failed: {0}")]
    Image(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Tin(#[from] TinError),
    #[error(transparent)]
    Morph(#[from] MorphError),
    #[error(transparent)]
    Zonal(#[from] ZonalError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Hydro(#[from] HydroError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    /// Attaches the file being read or written.
    pub fn at(self, path: impl Into<PathBuf>) -> CliError {
        CliError::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
