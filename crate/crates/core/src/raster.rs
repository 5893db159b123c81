//! Grid data model, ESRI ASCII grid I/O and TIN rasterization.
//!
//! Rasters are row-major with row 0 the northernmost row. The center of
//! cell `(row, col)` sits at
//! `(xll + (col + 0.5) * cellsize, yll + (nrows - row - 0.5) * cellsize)`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::parallel::Executor;
use crate::tin::Tin;

pub const DEFAULT_NODATA: f64 = -9999.0;
pub const DEFAULT_CELLSIZE: f64 = 2.0;
pub const DEFAULT_CELL_CAP: u64 = 1 << 31;
/// Fixed number of decimals used for cell values in ASCII grids.
pub const ASCII_DECIMALS: usize = 6;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid has {cells} cells, above the cap of {cap}")]
    TooLarge { cells: u64, cap: u64 },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("expected {expected} {what}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse '{token}' as a finite number")]
    BadToken { line: usize, token: String },
    #[error("raster has no valid cells")]
    AllNodata,
    #[error("grid specs differ")]
    SpecMismatch,
    #[error("value {value} at cell {index} is neither finite nor nodata")]
    InvalidValue { index: usize, value: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub ncols: usize,
    pub nrows: usize,
    pub xll: f64,
    pub yll: f64,
    pub cellsize: f64,
    pub nodata: f64,
}

impl GridSpec {
    pub fn new(ncols: usize, nrows: usize, xll: f64, yll: f64, cellsize: f64) -> Result<Self, RasterError> {
        let spec = GridSpec {
            ncols,
            nrows,
            xll,
            yll,
            cellsize,
            nodata: DEFAULT_NODATA,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_nodata(mut self, nodata: f64) -> Result<Self, RasterError> {
        self.nodata = nodata;
        self.validate()?;
        Ok(self)
    }

    /// Smallest grid aligned to multiples of `cellsize` covering the box.
    pub fn covering(xmin: f64, ymin: f64, xmax: f64, ymax: f64, cellsize: f64) -> Result<Self, RasterError> {
        if !(cellsize > 0.0 && cellsize.is_finite()) {
            return Err(RasterError::InvalidGrid(format!("cellsize {cellsize} must be > 0")));
        }
        if !(xmin.is_finite() && ymin.is_finite() && xmax.is_finite() && ymax.is_finite()) || xmax < xmin || ymax < ymin {
            return Err(RasterError::InvalidGrid("bad bounding box".into()));
        }
        let xll = (xmin / cellsize).floor() * cellsize;
        let yll = (ymin / cellsize).floor() * cellsize;
        let ncols = (((xmax - xll) / cellsize).ceil() as usize).max(1);
        let nrows = (((ymax - yll) / cellsize).ceil() as usize).max(1);
        GridSpec::new(ncols, nrows, xll, yll, cellsize)
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        self.validate_with_cap(DEFAULT_CELL_CAP)
    }

    pub fn validate_with_cap(&self, cap: u64) -> Result<(), RasterError> {
        if self.ncols == 0 || self.nrows == 0 {
            return Err(RasterError::InvalidGrid("grid has zero cells".into()));
        }
        if !(self.cellsize > 0.0 && self.cellsize.is_finite()) {
            return Err(RasterError::InvalidGrid(format!("cellsize {} must be > 0", self.cellsize)));
        }
        if !self.xll.is_finite() || !self.yll.is_finite() {
            return Err(RasterError::InvalidGrid("corner coordinates must be finite".into()));
        }
        if !self.nodata.is_finite() {
            return Err(RasterError::InvalidGrid("nodata must be finite".into()));
        }
        let cells = self.ncols as u64 * self.nrows as u64;
        if cells > cap {
            return Err(RasterError::TooLarge { cells, cap });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn top(&self) -> f64 {
        self.yll + self.nrows as f64 * self.cellsize
    }

    pub fn right(&self) -> f64 {
        self.xll + self.ncols as f64 * self.cellsize
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.ncols + col
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.xll + (col as f64 + 0.5) * self.cellsize,
            self.yll + (self.nrows as f64 - row as f64 - 0.5) * self.cellsize,
        )
    }

    /// Cell containing `(x, y)`; west and north cell edges belong to the cell.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = ((x - self.xll) / self.cellsize).floor();
        let row = ((self.top() - y) / self.cellsize).floor();
        if col < 0.0 || row < 0.0 || col >= self.ncols as f64 || row >= self.nrows as f64 {
            return None;
        }
        Some((row as usize, col as usize))
    }

    /// Same geometry, ignoring the nodata sentinel.
    pub fn same_grid(&self, other: &GridSpec) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && self.xll == other.xll
            && self.yll == other.yll
            && self.cellsize == other.cellsize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    spec: GridSpec,
    values: Vec<f64>,
    kind: RasterKind,
}

impl Raster {
    pub fn new(spec: GridSpec, values: Vec<f64>, kind: RasterKind) -> Result<Self, RasterError> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(RasterError::ShapeMismatch {
                what: "cells",
                expected: spec.len(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() && **v != spec.nodata)
        {
            return Err(RasterError::InvalidValue { index, value });
        }
        Ok(Raster { spec, values, kind })
    }

    pub fn filled(spec: GridSpec, value: f64, kind: RasterKind) -> Result<Self, RasterError> {
        Raster::new(spec, vec![value; spec.len()], kind)
    }

    /// Builds a raster by evaluating `f(x, y)` at every cell center.
    /// Non-finite results become nodata.
    pub fn from_fn<F>(spec: GridSpec, kind: RasterKind, exec: &Executor, f: F) -> Result<Self, RasterError>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        spec.validate()?;
        let mut values = vec![spec.nodata; spec.len()];
        exec.for_each_row(&mut values, spec.ncols, |row, out| {
            for (col, cell) in out.iter_mut().enumerate() {
                let (x, y) = spec.cell_center(row, col);
                let v = f(x, y);
                *cell = if v.is_finite() { v } else { spec.nodata };
            }
        });
        Ok(Raster { spec, values, kind })
    }

    pub(crate) fn from_parts_unchecked(spec: GridSpec, values: Vec<f64>, kind: RasterKind) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Raster { spec, values, kind }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kind(&self) -> RasterKind {
        self.kind
    }

    pub fn nodata(&self) -> f64 {
        self.spec.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn ncols(&self) -> usize {
        self.spec.ncols
    }

    pub fn nrows(&self) -> usize {
        self.spec.nrows
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.ncols + col]
    }

    /// Cell value, or `None` for nodata.
    #[inline]
    pub fn value(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.get(row, col);
        (v != self.spec.nodata).then_some(v)
    }

    #[inline]
    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.spec.nodata
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        let nodata = self.spec.nodata;
        self.values.iter().copied().filter(move |&v| v != nodata)
    }

    pub fn with_kind(mut self, kind: RasterKind) -> Self {
        self.kind = kind;
        self
    }

    /// Applies `f` to every valid cell; nodata stays nodata.
    pub fn map_valid<F: Fn(f64) -> f64>(&self, f: F) -> Result<Raster, RasterError> {
        let nodata = self.spec.nodata;
        let values = self
            .values
            .iter()
            .map(|&v| if v == nodata { v } else { f(v) })
            .collect();
        Raster::new(self.spec, values, self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

/// Single-pass min/max/mean over valid cells, mean by compensated summation.
pub fn raster_minmax_mean(raster: &Raster) -> Result<RasterStats, RasterError> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = CompensatedSum::new();
    let mut count = 0usize;
    for v in raster.valid_values() {
        min = min.min(v);
        max = max.max(v);
        sum.add(v);
        count += 1;
    }
    if count == 0 {
        return Err(RasterError::AllNodata);
    }
    Ok(RasterStats {
        min,
        max,
        mean: sum.total() / count as f64,
        count,
    })
}

/// Samples the TIN at every cell center; cells outside the hull are nodata.
pub fn rasterize_tin(tin: &Tin, spec: &GridSpec, exec: &Executor) -> Result<Raster, RasterError> {
    spec.validate()?;
    let spec = *spec;
    let mut values = vec![spec.nodata; spec.len()];
    exec.for_each_row(&mut values, spec.ncols, |row, out| {
        for (col, cell) in out.iter_mut().enumerate() {
            let (x, y) = spec.cell_center(row, col);
            if let Some(z) = tin.interpolate(x, y) {
                *cell = z;
            }
        }
    });
    Ok(Raster::from_parts_unchecked(spec, values, RasterKind::Continuous))
}

fn format_header_float(v: f64) -> String {
    format!("{v:?}")
}

/// The nodata token: integral sentinels print without decimals.
fn format_nodata(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// Renders the full ASCII grid text.
pub fn ascii_grid_string(raster: &Raster) -> String {
    let spec = raster.spec();
    let mut s = String::with_capacity(spec.len() * 12 + 128);
    let nodata_token = format_nodata(spec.nodata);
    let _ = writeln!(s, "ncols {}", spec.ncols);
    let _ = writeln!(s, "nrows {}", spec.nrows);
    let _ = writeln!(s, "xllcorner {}", format_header_float(spec.xll));
    let _ = writeln!(s, "yllcorner {}", format_header_float(spec.yll));
    let _ = writeln!(s, "cellsize {}", format_header_float(spec.cellsize));
    let _ = writeln!(s, "NODATA_value {nodata_token}");
    for row in raster.values().chunks(spec.ncols) {
        for (i, &v) in row.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            if v == spec.nodata {
                s.push_str(&nodata_token);
            } else {
                let _ = write!(s, "{:.*}", ASCII_DECIMALS, v);
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_ascii_grid(raster: &Raster, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(ascii_grid_string(raster).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<Raster, RasterError> {
    let text = fs::read_to_string(path)?;
    parse_ascii_grid(&text, RasterKind::Continuous)
}

pub fn read_ascii_grid_as(path: impl AsRef<Path>, kind: RasterKind) -> Result<Raster, RasterError> {
    let text = fs::read_to_string(path)?;
    parse_ascii_grid(&text, kind)
}

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<f64>,
    yll: Option<f64>,
    x_is_center: bool,
    y_is_center: bool,
    cellsize: Option<f64>,
    nodata: Option<f64>,
}

fn parse_number(token: &str, line: usize) -> Result<f64, RasterError> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(RasterError::BadToken {
            line,
            token: token.to_string(),
        }),
    }
}

/// Parses ASCII grid text. Header keywords are case-insensitive and may be
/// separated from their values by any whitespace.
pub fn parse_ascii_grid(text: &str, kind: RasterKind) -> Result<Raster, RasterError> {
    let mut header = Header::default();
    let mut lines = text.lines().enumerate().peekable();

    while let Some(&(idx, line)) = lines.peek() {
        let mut tokens = line.split_whitespace();
        let Some(key) = tokens.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let key = key.to_ascii_lowercase();
        if key == "nan" || key == "inf" || key == "infinity" {
            break;
        }
        let value = tokens
            .next()
            .ok_or_else(|| RasterError::MalformedHeader(format!("line {}: '{key}' has no value", idx + 1)))?;
        if tokens.next().is_some() {
            return Err(RasterError::MalformedHeader(format!("line {}: trailing tokens", idx + 1)));
        }
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| RasterError::MalformedHeader(format!("line {}: '{v}' is not a count", idx + 1)))
        };
        let num = |v: &str| {
            parse_number(v, idx + 1).map_err(|_| RasterError::MalformedHeader(format!("line {}: '{v}' is not a number", idx + 1)))
        };
        match key.as_str() {
            "ncols" => header.ncols = Some(int(value)?),
            "nrows" => header.nrows = Some(int(value)?),
            "xllcorner" => header.xll = Some(num(value)?),
            "yllcorner" => header.yll = Some(num(value)?),
            "xllcenter" => {
                header.xll = Some(num(value)?);
                header.x_is_center = true;
            }
            "yllcenter" => {
                header.yll = Some(num(value)?);
                header.y_is_center = true;
            }
            "cellsize" => header.cellsize = Some(num(value)?),
            "nodata_value" => header.nodata = Some(num(value)?),
            other => {
                return Err(RasterError::MalformedHeader(format!("line {}: unknown keyword '{other}'", idx + 1)));
            }
        }
        lines.next();
    }

    let missing = |what: &str| RasterError::MalformedHeader(format!("missing {what}"));
    let ncols = header.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = header.nrows.ok_or_else(|| missing("nrows"))?;
    let cellsize = header.cellsize.ok_or_else(|| missing("cellsize"))?;
    let mut xll = header.xll.ok_or_else(|| missing("xllcorner"))?;
    let mut yll = header.yll.ok_or_else(|| missing("yllcorner"))?;
    if header.x_is_center {
        xll -= cellsize / 2.0;
    }
    if header.y_is_center {
        yll -= cellsize / 2.0;
    }
    let spec = GridSpec::new(ncols, nrows, xll, yll, cellsize)?.with_nodata(header.nodata.unwrap_or(DEFAULT_NODATA))?;

    let mut values = Vec::with_capacity(spec.len());
    let mut rows = 0usize;
    for (idx, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        rows += 1;
        if rows > nrows {
            return Err(RasterError::ShapeMismatch {
                what: "rows",
                expected: nrows,
                found: rows + text.lines().skip(idx + 1).filter(|l| !l.trim().is_empty()).count(),
            });
        }
        if tokens.len() != ncols {
            return Err(RasterError::ShapeMismatch {
                what: "columns",
                expected: ncols,
                found: tokens.len(),
            });
        }
        for t in tokens {
            values.push(parse_number(t, idx + 1)?);
        }
    }
    if rows != nrows {
        return Err(RasterError::ShapeMismatch {
            what: "rows",
            expected: nrows,
            found: rows,
        });
    }
    Raster::new(spec, values, kind)
}
