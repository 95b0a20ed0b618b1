//! Grid geometry, maps over the image, Gaussian fields and kernel density
//! estimates.
//!
//! Cells are indexed `(i, j)` with `i` along x and `j` along y; cell `k`
//! covers the half-open interval `(k·Δ, (k+1)·Δ]` in degrees, except that
//! the origin belongs to cell 0. Storage is row-major in `j`.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square lattice covering the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    side: usize,
    degrees_per_cell: f64,
}

impl GridSpec {
    pub fn new(side: usize, degrees_per_cell: f64) -> Result<Self> {
        if side < 2 {
            return Err(Error::InvalidParameter(format!("grid side length must be at least 2, got {side}")));
        }
        if !(degrees_per_cell > 0.0 && degrees_per_cell.is_finite()) {
            return Err(Error::InvalidParameter(format!("degrees per cell must be positive, got {degrees_per_cell}")));
        }
        Ok(Self { side, degrees_per_cell })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn degrees_per_cell(&self) -> f64 {
        self.degrees_per_cell
    }

    pub fn n_cells(&self) -> usize {
        self.side * self.side
    }

    /// Image width (and height) in degrees.
    pub fn extent(&self) -> f64 {
        self.side as f64 * self.degrees_per_cell
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.side + i
    }

    /// Cell center in degrees.
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.degrees_per_cell, (j as f64 + 0.5) * self.degrees_per_cell)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let e = self.extent();
        (0.0..=e).contains(&x) && (0.0..=e).contains(&y)
    }

    /// Center of the image in degrees.
    pub fn center(&self) -> (f64, f64) {
        let h = self.extent() / 2.0;
        (h, h)
    }
}

/// A fixation at continuous image coordinates (degrees) with its duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub x: f64,
    pub y: f64,
    /// Seconds.
    pub duration: f64,
}

impl Fixation {
    pub fn new(x: f64, y: f64, duration: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(Error::InvalidArgument(format!("fixation coordinates must be finite, got ({x}, {y})")));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidArgument(format!("fixation duration must be positive, got {duration}")));
        }
        Ok(Self { x, y, duration })
    }

    pub fn pos(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn cell(&self, grid: &GridSpec) -> Result<(usize, usize)> {
        bin_fixation(self.x, self.y, grid)
    }

    pub fn distance(&self, other: &Fixation) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A scalar field over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Map {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Map {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidArgument(format!("map needs {} values, got {}", grid.n_cells(), values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("map value at flat index {k} is not finite")));
        }
        Ok(Self { grid, values })
    }

    /// Builds a map without validating entries. Callers guarantee finiteness.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Self { grid, values }
    }

    pub fn uniform(grid: GridSpec) -> Self {
        let n = grid.n_cells();
        Self { grid, values: vec![1.0 / n as f64; n] }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.n_cells()] }
    }

    /// Builds a map by evaluating `f(i, j)` on every cell.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let l = grid.side();
        let mut values = Vec::with_capacity(grid.n_cells());
        for j in 0..l {
            for i in 0..l {
                values.push(f(i, j));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cell holding the largest value (first in storage order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        (best % self.grid.side, best / self.grid.side)
    }

    /// Whether the map is entrywise non-negative with unit sum within `tol`.
    pub fn is_probability(&self, tol: f64) -> bool {
        self.values.iter().all(|v| *v >= 0.0) && (self.sum() - 1.0).abs() <= tol
    }

    /// Rescales to unit sum. Fails on negative entries or a zero sum.
    pub fn normalized(&self) -> Result<Map> {
        if self.values.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArgument("cannot normalize a map with negative entries".into()));
        }
        let s = self.sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("cannot normalize a map with sum {s}")));
        }
        Ok(Map::from_raw(self.grid, self.values.iter().map(|v| v / s).collect()))
    }

    /// Writes the map as `L` comma separated rows, row `j` holding cells `(0..L, j)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let l = self.grid.side;
        for row in self.values.chunks(l) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, degrees_per_cell: f64) -> Result<Map> {
        let mut values = Vec::new();
        let mut rows = 0usize;
        let mut side = None;
        for (n, line) in BufReader::new(r).lines().enumerate() {
            let line_no = n as u64 + 1;
            let line = line.map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
            match side {
                None => side = Some(row.len()),
                Some(l) if l != row.len() => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {l} columns, got {}", row.len()),
                    })
                }
                _ => {}
            }
            values.extend(row);
            rows += 1;
        }
        let l = side.ok_or_else(|| Error::InsufficientData("empty map file".into()))?;
        if rows != l {
            return Err(Error::InvalidArgument(format!("map must be square, got {rows}x{l}")));
        }
        Map::new(GridSpec::new(l, degrees_per_cell)?, values)
    }

    /// Flat binary: `L` as little-endian u64, then `L²` little-endian f64 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.grid.side as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, degrees_per_cell: f64) -> Result<Map> {
        let mut header = [0u8; 8];
        r.read_exact(&mut header).map_err(|e| Error::InvalidArgument(format!("map header: {e}")))?;
        let side = u64::from_le_bytes(header) as usize;
        let grid = GridSpec::new(side, degrees_per_cell)?;
        let mut buf = vec![0u8; grid.n_cells() * 8];
        r.read_exact(&mut buf).map_err(|e| Error::InvalidArgument(format!("map body: {e}")))?;
        let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        Map::new(grid, values)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_binary(std::io::BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    pub fn load_binary(path: &Path, degrees_per_cell: f64) -> Result<Map> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Map::read_binary(BufReader::new(f), degrees_per_cell)
    }
}

/// Cell containing `(x, y)`. Coordinates on a shared edge go to the lower-index cell.
pub fn bin_fixation(x: f64, y: f64, grid: &GridSpec) -> Result<(usize, usize)> {
    if !grid.contains(x, y) {
        return Err(Error::OutOfBounds { x, y, extent: grid.extent() });
    }
    Ok((bin_coord(x, grid), bin_coord(y, grid)))
}

#[inline]
fn bin_coord(v: f64, grid: &GridSpec) -> usize {
    let c = (v / grid.degrees_per_cell).ceil();
    (c.max(1.0) as usize - 1).min(grid.side - 1)
}

/// Unnormalized 1-D Gaussian profile `exp(-(k + 0.5 - c)² / 2s²)` over cell
/// centers, with `c` and `s` in cell units.
pub(crate) fn gaussian_profile(center: f64, sigma: f64, out: &mut [f64]) {
    let inv = -0.5 / (sigma * sigma);
    for (k, o) in out.iter_mut().enumerate() {
        let d = k as f64 + 0.5 - center;
        *o = (d * d * inv).exp();
    }
}

/// Isotropic Gaussian density centred at `center` (degrees), evaluated at cell
/// centers in cell units so that the peak equals `1 / (2π σ²)` with σ in cells.
pub fn gaussian_map(center: (f64, f64), sigma: f64, grid: &GridSpec) -> Result<Map> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let l = grid.side();
    let dpc = grid.degrees_per_cell();
    let s = sigma / dpc;
    let mut gx = vec![0.0; l];
    let mut gy = vec![0.0; l];
    gaussian_profile(center.0 / dpc, s, &mut gx);
    gaussian_profile(center.1 / dpc, s, &mut gy);
    let norm = 1.0 / (2.0 * PI * s * s);
    let mut values = Vec::with_capacity(grid.n_cells());
    for y in &gy {
        for x in &gx {
            values.push(norm * x * y);
        }
    }
    Ok(Map::from_raw(*grid, values))
}

/// Default kernel bandwidth in degrees for fixation density estimates.
pub const DEFAULT_KDE_BANDWIDTH: f64 = 1.0;

/// Gaussian kernel density estimate of fixation positions, normalized to unit
/// sum over the grid.
pub fn kde_density<'a, I>(positions: I, bandwidth: f64, grid: &GridSpec) -> Result<Map>
where
    I: IntoIterator<Item = &'a Fixation>,
{
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let l = grid.side();
    let dpc = grid.degrees_per_cell();
    let s = bandwidth / dpc;
    let mut acc = vec![0.0; grid.n_cells()];
    let mut gx = vec![0.0; l];
    let mut gy = vec![0.0; l];
    let mut count = 0usize;
    for f in positions {
        gaussian_profile(f.x / dpc, s, &mut gx);
        gaussian_profile(f.y / dpc, s, &mut gy);
        for (row, y) in acc.chunks_mut(l).zip(&gy) {
            for (a, x) in row.iter_mut().zip(&gx) {
                *a += y * x;
            }
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("kernel density estimate needs at least one fixation".into()));
    }
    Map::from_raw(*grid, acc).normalized()
}
