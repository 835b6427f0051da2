//! Scalar fields on the torus grid and their on-disk formats.
//!
//! Two formats share one header: a text format (two `#` comment lines, a
//! `value` column header, one value per line) and a little-endian binary
//! format (`AUXMAFLD`, version, complex dimension, nodes per axis, count,
//! then the values). Values follow the grid's row-major order with the last
//! axis varying fastest.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;

const MAGIC: &[u8; 8] = b"AUXMAFLD";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self { values: vec![0.0; grid.len()], grid }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self { values: vec![c; grid.len()], grid }
    }

    /// Samples `f` at every node; `f` receives the real coordinates.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid, values }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Average over the nodes, which is the integral against the unit volume.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// First node attaining the minimum.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }

    /// First node attaining the maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Shifts by a constant so that the maximum is zero.
    pub fn normalize_max_zero(&mut self) {
        let m = self.max();
        self.values.iter_mut().for_each(|v| *v -= m);
    }

    pub fn is_max_normalized(&self, tol: f64) -> bool {
        self.max().abs() <= tol
    }

    /// Translates by whole nodes along `axis`: the result at node `i`
    /// equals the input at node `i - steps`.
    pub fn translate(&self, axis: usize, steps: isize) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for (i, v) in values.iter_mut().enumerate() {
            *v = self.values[self.grid.shift(i, axis, -steps)];
        }
        Self { grid: self.grid, values }
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# auxma-field {VERSION}")?;
        writeln!(
            w,
            "# complex_dim={} nodes_per_axis={} layout=row-major-last-axis-fastest",
            self.grid.complex_dim(),
            self.grid.nodes_per_axis()
        )?;
        writeln!(w, "value")?;
        for v in &self.values {
            writeln!(w, "{v:?}")?;
        }
        Ok(())
    }

    pub fn read_text<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing {what}")))?
                .map_err(Error::from)
        };
        let magic = next("magic line")?;
        if magic.trim() != format!("# auxma-field {VERSION}") {
            return Err(Error::Format(format!("unrecognised header line `{magic}`")));
        }
        let dims = next("dimension line")?;
        let mut complex_dim = None;
        let mut nodes = None;
        for token in dims.trim_start_matches('#').split_whitespace() {
            if let Some(v) = token.strip_prefix("complex_dim=") {
                complex_dim = v.parse::<usize>().ok();
            } else if let Some(v) = token.strip_prefix("nodes_per_axis=") {
                nodes = v.parse::<usize>().ok();
            }
        }
        let (Some(n), Some(nodes)) = (complex_dim, nodes) else {
            return Err(Error::Format(format!("bad dimension line `{dims}`")));
        };
        let grid = TorusGrid::new(n, nodes)?;
        if next("column header")?.trim() != "value" {
            return Err(Error::Format("expected `value` column header".into()));
        }
        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("data line {}: {e}", lineno + 1)))?;
            values.push(v);
        }
        Self::new(grid, values).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.complex_dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.nodes_per_axis() as u32).to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let nodes = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        let grid = TorusGrid::new(n, nodes)?;
        if count != grid.len() {
            return Err(Error::Format(format!("count {count} does not match grid size {}", grid.len())));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Ok(Self { grid, values })
    }
}
