//! Regular chart lattices and complex fields sampled on them.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of ghost layers stencils may read beyond an evaluation point.
pub const GHOST_LAYERS: usize = 2;

/// Axis-aligned grid `x_i = origin + i * spacing`, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, spacing: Vec<f64>, origin: Vec<f64>) -> Result<Self> {
        if dims.len() != spacing.len() || dims.len() != origin.len() || dims.is_empty() {
            return Err(Error::DimensionMismatch("grid dims, spacing and origin must share a nonzero length".into()));
        }
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::DegenerateStep { eps: spacing.iter().cloned().fold(f64::NAN, f64::min), reason: "lattice spacing must be positive".into() });
        }
        Ok(Grid { dims, spacing, origin })
    }

    /// `n` points per axis covering `[lo, hi]` inclusive on every axis.
    pub fn cube(n: usize, lo: &[f64], hi: &[f64]) -> Result<Self> {
        let spacing = lo.iter().zip(hi).map(|(a, b)| (b - a) / (n as f64 - 1.0)).collect();
        Grid::new(vec![n; lo.len()], spacing, lo.to_vec())
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn unflat(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for a in (0..self.ndim()).rev() {
            idx[a] = k % self.dims[a];
            k /= self.dims[a];
        }
        idx
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(a, &i)| self.origin[a] + i as f64 * self.spacing[a]).collect()
    }

    /// Whether `idx` has at least `layers` neighbours on both sides of every axis.
    pub fn has_ghosts(&self, idx: &[usize], layers: usize) -> bool {
        idx.iter().zip(&self.dims).all(|(&i, &n)| i >= layers && i + layers < n)
    }

    pub fn require_ghosts(&self, idx: &[usize]) -> Result<()> {
        if idx.len() != self.ndim() {
            return Err(Error::DimensionMismatch(format!("index has {} axes, grid has {}", idx.len(), self.ndim())));
        }
        if self.has_ghosts(idx, GHOST_LAYERS) {
            Ok(())
        } else {
            Err(Error::MissingGhost { index: idx.to_vec() })
        }
    }

    /// All indices with full ghost layers.
    pub fn interior(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|k| self.unflat(k)).filter(|i| self.has_ghosts(i, GHOST_LAYERS)).collect()
    }

    pub(crate) fn shifted(&self, idx: &[usize], axis: usize, by: isize) -> usize {
        let mut j = idx.to_vec();
        j[axis] = (j[axis] as isize + by) as usize;
        self.flat(&j)
    }
}

/// Complex field with `components` values per lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub components: usize,
    pub data: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub components: usize,
    /// Interleaved (re, im) pairs when true, real parts only when false.
    pub complex: bool,
}

impl Field {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); grid.len() * components];
        Field { grid, components, data }
    }

    /// Samples `f(x)` (length `components`) at every lattice point.
    pub fn from_fn(grid: Grid, components: usize, f: impl Fn(&[f64]) -> Vec<Complex64>) -> Self {
        let mut out = Field::zeros(grid, components);
        for k in 0..out.grid.len() {
            let v = f(&out.grid.point(&out.grid.unflat(k)));
            assert_eq!(v.len(), components, "field sample has the wrong component count");
            out.data[k * components..(k + 1) * components].copy_from_slice(&v);
        }
        out
    }

    pub fn at(&self, flat: usize) -> &[Complex64] {
        &self.data[flat * self.components..(flat + 1) * self.components]
    }

    pub fn header(&self, complex: bool) -> FieldHeader {
        FieldHeader {
            dims: self.grid.dims.clone(),
            spacing: self.grid.spacing.clone(),
            origin: self.grid.origin.clone(),
            components: self.components,
            complex,
        }
    }

    /// Writes `path` (little-endian f64) and a JSON header next to it with extension `.json`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        let complex = self.data.iter().any(|z| z.im != 0.0);
        let mut bytes = Vec::with_capacity(self.data.len() * if complex { 16 } else { 8 });
        for z in &self.data {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            if complex {
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        fs::write(path, bytes)?;
        let header_path = path.with_extension("json");
        fs::write(&header_path, serde_json::to_string_pretty(&self.header(complex))?)?;
        Ok(header_path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let header: FieldHeader = serde_json::from_str(&fs::read_to_string(path.with_extension("json"))?)?;
        let grid = Grid::new(header.dims, header.spacing, header.origin)?;
        let bytes = fs::read(path)?;
        let per = if header.complex { 16 } else { 8 };
        let expected = grid.len() * header.components * per;
        if bytes.len() != expected {
            return Err(Error::Io(format!("field payload has {} bytes, header implies {expected}", bytes.len())));
        }
        let num = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8-byte chunk"));
        let data = (0..grid.len() * header.components)
            .map(|k| {
                let o = k * per;
                Complex64::new(num(o), if header.complex { num(o + 8) } else { 0.0 })
            })
            .collect();
        Ok(Field { grid, components: header.components, data })
    }
}
