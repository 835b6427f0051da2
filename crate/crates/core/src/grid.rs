use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of nodes a grid may hold.
const MAX_NODES: usize = 1 << 26;

/// Uniform periodic grid on the unit torus of complex dimension `n`.
///
/// Real coordinates are ordered `x1, y1, x2, y2, ...` so that
/// `z_j = x_j + i y_j` uses axes `2j` and `2j + 1`. Storage is row-major
/// with the last axis varying fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
    nodes: usize,
}

impl TorusGrid {
    pub fn new(complex_dim: usize, nodes_per_axis: usize) -> Result<Self> {
        if complex_dim == 0 {
            return Err(Error::InvalidGrid("complex dimension must be at least 1".into()));
        }
        if nodes_per_axis < 4 || !nodes_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "nodes per axis must be even and at least 4, got {nodes_per_axis}"
            )));
        }
        let m = 2 * complex_dim;
        let total = (nodes_per_axis as u128).checked_pow(m as u32);
        match total {
            Some(t) if t <= MAX_NODES as u128 => Ok(Self { n: complex_dim, nodes: nodes_per_axis }),
            _ => Err(Error::InvalidGrid(format!(
                "{nodes_per_axis}^{m} nodes exceeds the limit of {MAX_NODES}"
            ))),
        }
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.nodes as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.real_dim() as i32)
    }

    /// Volume of the unit torus.
    pub fn volume(&self) -> f64 {
        1.0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.nodes.pow((self.real_dim() - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let m = self.real_dim();
        let mut out = vec![0; m];
        for a in (0..m).rev() {
            out[a] = idx % self.nodes;
            idx /= self.nodes;
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.nodes + (i % self.nodes))
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(idx).into_iter().map(|i| i as f64 * h).collect()
    }

    /// Index of the node `delta` steps away along `axis`, with wrap-around.
    pub fn shift(&self, idx: usize, axis: usize, delta: isize) -> usize {
        let stride = self.stride(axis);
        let coord = (idx / stride) % self.nodes;
        let n = self.nodes as isize;
        let new = ((coord as isize + delta) % n + n) % n;
        idx - coord * stride + new as usize * stride
    }

    /// Periodic displacement `to - from`, each component in `[-1/2, 1/2)`.
    pub fn displacement(&self, from: &[f64], to: &[f64]) -> Vec<f64> {
        from.iter()
            .zip(to)
            .map(|(a, b)| {
                let d = b - a;
                d - (d + 0.5).floor()
            })
            .collect()
    }
}
