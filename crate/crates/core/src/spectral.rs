//! Fourier differentiation on the periodic grid.
//!
//! First derivatives drop the Nyquist mode. Pure second derivatives keep it,
//! so the Laplacian symbol is `-(2 pi)^2 |k|^2` on every mode and the flat
//! Poisson problem is invertible on all non-constant modes.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::TorusGrid;

#[derive(Clone)]
pub struct Spectral {
    grid: TorusGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

/// Second derivatives `d_a d_b` for `a <= b`, stored in packed upper order.
#[derive(Clone, Debug)]
pub struct RealHessian {
    m: usize,
    comps: Vec<Vec<f64>>,
}

impl RealHessian {
    pub fn packed_index(m: usize, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a * m - a * (a + 1) / 2 + b
    }

    pub fn get(&self, a: usize, b: usize) -> &[f64] {
        &self.comps[Self::packed_index(self.m, a, b)]
    }

    pub fn at(&self, node: usize, a: usize, b: usize) -> f64 {
        self.get(a, b)[node]
    }

    pub fn real_dim(&self) -> usize {
        self.m
    }
}

impl Spectral {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.nodes_per_axis();
        Self { grid, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Signed wavenumber of index `i`; the Nyquist index maps to `-N/2`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.grid.nodes_per_axis();
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    fn is_nyquist(&self, i: usize) -> bool {
        i == self.grid.nodes_per_axis() / 2
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.nodes_per_axis();
        let m = self.grid.real_dim();
        let total = data.len();
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut lines = vec![Complex64::default(); total];
        for axis in 0..m {
            let stride = self.grid.stride(axis);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = stride * n;
            // Gather every line along `axis` contiguously, transform them in
            // one batch, then scatter back.
            for (b, base) in (0..total).step_by(block).enumerate() {
                for k in 0..n {
                    let src = &data[base + k * stride..base + (k + 1) * stride];
                    for (off, c) in src.iter().enumerate() {
                        lines[(b * stride + off) * n + k] = *c;
                    }
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            for (b, base) in (0..total).step_by(block).enumerate() {
                for k in 0..n {
                    let dst = &mut data[base + k * stride..base + (k + 1) * stride];
                    for (off, c) in dst.iter_mut().enumerate() {
                        *c = lines[(b * stride + off) * n + k];
                    }
                }
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.fwd);
        data
    }

    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, &self.inv);
        let scale = 1.0 / data.len() as f64;
        data.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies a Fourier multiplier given as a function of the per-axis indices.
    pub fn apply(&self, hat: &[Complex64], symbol: impl Fn(&[usize]) -> Complex64) -> Vec<f64> {
        let mut out = hat.to_vec();
        let n = self.grid.nodes_per_axis();
        let mut mi = vec![0usize; self.grid.real_dim()];
        for c in out.iter_mut() {
            *c *= symbol(&mi);
            for d in mi.iter_mut().rev() {
                *d += 1;
                if *d < n {
                    break;
                }
                *d = 0;
            }
        }
        self.inverse_real(out)
    }

    fn first_symbol(&self, i: usize) -> Complex64 {
        if self.is_nyquist(i) {
            Complex64::default()
        } else {
            Complex64::new(0.0, 2.0 * PI * self.wavenumber(i) as f64)
        }
    }

    fn second_symbol(&self, mi: &[usize], a: usize, b: usize) -> Complex64 {
        if a == b {
            let k = 2.0 * PI * self.wavenumber(mi[a]) as f64;
            Complex64::new(-k * k, 0.0)
        } else {
            self.first_symbol(mi[a]) * self.first_symbol(mi[b])
        }
    }

    pub fn derivative(&self, hat: &[Complex64], axis: usize) -> Vec<f64> {
        self.apply(hat, |mi| self.first_symbol(mi[axis]))
    }

    pub fn gradient(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let hat = self.forward(values);
        (0..self.grid.real_dim()).map(|a| self.derivative(&hat, a)).collect()
    }

    pub fn second(&self, hat: &[Complex64], a: usize, b: usize) -> Vec<f64> {
        self.apply(hat, |mi| self.second_symbol(mi, a, b))
    }

    pub fn real_hessian(&self, values: &[f64]) -> RealHessian {
        let hat = self.forward(values);
        self.real_hessian_from_hat(&hat)
    }

    /// All second derivatives from a precomputed transform. Two real
    /// outputs share each complex inverse transform.
    pub fn real_hessian_from_hat(&self, hat: &[Complex64]) -> RealHessian {
        let m = self.grid.real_dim();
        let n = self.grid.nodes_per_axis();
        let first: Vec<Complex64> = (0..n).map(|i| self.first_symbol(i)).collect();
        let pure: Vec<f64> = (0..n)
            .map(|i| {
                let k = 2.0 * PI * self.wavenumber(i) as f64;
                -k * k
            })
            .collect();
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect();
        let symbol = |mi: &[usize], (a, b): (usize, usize)| -> Complex64 {
            if a == b {
                Complex64::new(pure[mi[a]], 0.0)
            } else {
                first[mi[a]] * first[mi[b]]
            }
        };
        let mut comps: Vec<Vec<f64>> = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(2) {
            let mut buf = Vec::with_capacity(hat.len());
            let mut mi = vec![0usize; m];
            for c in hat.iter() {
                let mut v = *c * symbol(&mi, chunk[0]);
                if chunk.len() == 2 {
                    v += Complex64::i() * *c * symbol(&mi, chunk[1]);
                }
                buf.push(v);
                for d in mi.iter_mut().rev() {
                    *d += 1;
                    if *d < n {
                        break;
                    }
                    *d = 0;
                }
            }
            self.transform(&mut buf, &self.inv);
            let scale = 1.0 / buf.len() as f64;
            comps.push(buf.iter().map(|c| c.re * scale).collect());
            if chunk.len() == 2 {
                comps.push(buf.iter().map(|c| c.im * scale).collect());
            }
        }
        RealHessian { m, comps }
    }

    fn laplace_symbol(&self, mi: &[usize]) -> f64 {
        mi.iter()
            .map(|&i| {
                let k = 2.0 * PI * self.wavenumber(i) as f64;
                -k * k
            })
            .sum()
    }

    /// Flat Euclidean Laplacian.
    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let hat = self.forward(values);
        self.apply(&hat, |mi| Complex64::new(self.laplace_symbol(mi), 0.0))
    }

    /// Mean-zero solution of `Δu = rhs - mean(rhs)`.
    pub fn solve_poisson(&self, rhs: &[f64]) -> Vec<f64> {
        let hat = self.forward(rhs);
        self.apply(&hat, |mi| {
            let s = self.laplace_symbol(mi);
            if s == 0.0 {
                Complex64::default()
            } else {
                Complex64::new(1.0 / s, 0.0)
            }
        })
    }

    /// Value, gradient and Hessian of the trigonometric interpolant at `x`.
    pub fn evaluate(&self, hat: &[Complex64], x: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let m = self.grid.real_dim();
        let n = self.grid.nodes_per_axis();
        let scale = 1.0 / hat.len() as f64;
        // Per-axis phase factors e^{2 pi i k x_a}.
        let phases: Vec<Vec<Complex64>> = (0..m)
            .map(|a| {
                (0..n)
                    .map(|i| {
                        let k = self.wavenumber(i) as f64;
                        Complex64::from_polar(1.0, 2.0 * PI * k * x[a])
                    })
                    .collect()
            })
            .collect();
        let mut val = 0.0;
        let mut grad = vec![0.0; m];
        let mut hess = vec![vec![0.0; m]; m];
        for (idx, c) in hat.iter().enumerate() {
            let mi = self.grid.multi_index(idx);
            let mut e = *c * scale;
            for a in 0..m {
                e *= phases[a][mi[a]];
            }
            val += e.re;
            for a in 0..m {
                grad[a] += (e * self.first_symbol(mi[a])).re;
                for b in a..m {
                    let h = (e * self.second_symbol(&mi, a, b)).re;
                    hess[a][b] += h;
                    if a != b {
                        hess[b][a] += h;
                    }
                }
            }
        }
        (val, grad, hess)
    }

    /// Value of the trigonometric interpolant at `x`.
    pub fn interpolate(&self, hat: &[Complex64], x: &[f64]) -> f64 {
        let m = self.grid.real_dim();
        let n = self.grid.nodes_per_axis();
        let scale = 1.0 / hat.len() as f64;
        let phases: Vec<Vec<Complex64>> = (0..m)
            .map(|a| {
                (0..n)
                    .map(|i| Complex64::from_polar(1.0, 2.0 * PI * self.wavenumber(i) as f64 * x[a]))
                    .collect()
            })
            .collect();
        let mut val = 0.0;
        for (idx, c) in hat.iter().enumerate() {
            let mi = self.grid.multi_index(idx);
            let mut e = *c;
            for a in 0..m {
                e *= phases[a][mi[a]];
            }
            val += e.re;
        }
        val * scale
    }
}
