//! Green's functions of Kähler metric Laplacians on the torus, their norms,
//! and the diameter bound obtained from Green's formula.
//!
//! A Hermitian metric `ω = A + iB` is read as the Riemannian metric
//! `[[A, -B], [B, A]]` on interleaved axes `(x_j, y_j)`, with volume density
//! `det ω`. The Laplacian is the divergence-form operator
//! `Δ f = w⁻¹ ∂_a (w g^{ab} ∂_b f)`, `w = det ω`, discretized through the
//! energy `Σ h^m ½ (D⁺fᵀ C D⁺f + D⁻fᵀ C D⁻f)`, `C = w g⁻¹`, so the stiffness
//! matrix is symmetric and Green slices are symmetric in their arguments.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::TorusGrid;
use crate::hermitian::{Hermitian, ComplexHessian};
use crate::krylov::pcg;
use crate::spectral::Spectral;

/// Kähler metric sampled on a torus grid.
#[derive(Clone, Debug)]
pub struct MetricField {
    grid: TorusGrid,
    omega: Vec<Hermitian>,
    /// Real metric per node, `m x m`.
    real: Vec<DMatrix<f64>>,
    /// `det ω` per node.
    density: Vec<f64>,
}

fn real_metric(n: usize, h: &Hermitian) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let (a, b) = (h[(j, k)].re, h[(j, k)].im);
            g[(2 * j, 2 * k)] = a;
            g[(2 * j + 1, 2 * k + 1)] = a;
            g[(2 * j, 2 * k + 1)] = -b;
            g[(2 * j + 1, 2 * k)] = b;
        }
    }
    g
}

impl MetricField {
    pub fn new(grid: TorusGrid, omega: Vec<Hermitian>) -> Result<Self> {
        let n = grid.complex_dim();
        if omega.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("{} metric samples for {} nodes", omega.len(), grid.len())));
        }
        let mut real = Vec::with_capacity(omega.len());
        let mut density = Vec::with_capacity(omega.len());
        for (i, h) in omega.iter().enumerate() {
            if h.nrows() != n || h.ncols() != n {
                return Err(Error::InvalidArgument(format!("metric at node {i} is not {n}x{n}")));
            }
            let g = real_metric(n, h);
            let sym = 0.5 * (&g + g.transpose());
            let eig = sym.clone().symmetric_eigenvalues();
            if eig.iter().any(|&l| !(l > 0.0)) {
                return Err(Error::Domain(format!("metric is not positive definite at node {i}")));
            }
            density.push(eig.iter().product::<f64>().sqrt());
            real.push(sym);
        }
        Ok(Self { grid, omega, real, density })
    }

    pub fn flat(grid: TorusGrid) -> Self {
        let n = grid.complex_dim();
        Self::new(grid, vec![Hermitian::identity(n, n); grid.len()]).expect("identity is positive")
    }

    /// `e^u ω_flat`.
    pub fn conformal(u: &ScalarField) -> Result<Self> {
        let grid = *u.grid();
        let n = grid.complex_dim();
        let omega = u.values().iter().map(|v| Hermitian::identity(n, n) * Complex64::new(v.exp(), 0.0)).collect();
        Self::new(grid, omega)
    }

    /// `ω_flat + i∂∂̄ψ`.
    pub fn from_potential(psi: &ScalarField) -> Result<Self> {
        let spectral = Spectral::new(*psi.grid());
        let hess = ComplexHessian::of(psi, &spectral);
        Self::new(*psi.grid(), hess.shifted_identity())
    }

    /// Metric multiplied by a positive constant.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor must be positive, got {factor}")));
        }
        Self::new(self.grid, self.omega.iter().map(|h| h * Complex64::new(factor, 0.0)).collect())
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn omega(&self) -> &[Hermitian] {
        &self.omega
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Node weights `det ω · h^m`.
    pub fn weights(&self) -> Vec<f64> {
        let cell = self.grid.cell_volume();
        self.density.iter().map(|d| d * cell).collect()
    }

    pub fn volume(&self) -> f64 {
        self.weights().iter().sum()
    }
}

/// Stiffness operator of the weighted Laplacian.
struct Stiffness {
    grid: TorusGrid,
    /// `w g⁻¹` per node, row-major `m x m`.
    coeff: Vec<Vec<f64>>,
    /// `g⁻¹` per node.
    inverse: Vec<Vec<f64>>,
    plus: Vec<Vec<usize>>,
    minus: Vec<Vec<usize>>,
    scale: f64,
}

impl Stiffness {
    fn new(metric: &MetricField) -> Result<Self> {
        let grid = metric.grid;
        let m = grid.real_dim();
        let mut coeff = Vec::with_capacity(grid.len());
        let mut inverse = Vec::with_capacity(grid.len());
        for (g, w) in metric.real.iter().zip(&metric.density) {
            let inv = g
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Domain("metric is not invertible".into()))?;
            inverse.push(inv.transpose().as_slice().to_vec());
            coeff.push((inv * *w).transpose().as_slice().to_vec());
        }
        let plus = (0..m).map(|a| (0..grid.len()).map(|i| grid.shift(i, a, 1)).collect()).collect();
        let minus = (0..m).map(|a| (0..grid.len()).map(|i| grid.shift(i, a, -1)).collect()).collect();
        let h = grid.spacing();
        Ok(Self { grid, coeff, inverse, plus, minus, scale: h.powi(m as i32 - 2) })
    }

    fn differences(&self, f: &[f64], node: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.grid.real_dim();
        let dp = (0..m).map(|a| f[self.plus[a][node]] - f[node]).collect();
        let dm = (0..m).map(|a| f[node] - f[self.minus[a][node]]).collect();
        (dp, dm)
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let m = self.grid.real_dim();
        let len = f.len();
        let mut out = vec![0.0; len];
        for x in 0..len {
            let (dp, dm) = self.differences(f, x);
            let c = &self.coeff[x];
            for a in 0..m {
                let (mut fp, mut fm) = (0.0, 0.0);
                for b in 0..m {
                    fp += c[a * m + b] * dp[b];
                    fm += c[a * m + b] * dm[b];
                }
                // D⁺ᵀ and D⁻ᵀ scatter the fluxes.
                out[self.plus[a][x]] += 0.5 * fp;
                out[x] -= 0.5 * fp;
                out[x] += 0.5 * fm;
                out[self.minus[a][x]] -= 0.5 * fm;
            }
        }
        out.iter_mut().for_each(|v| *v *= self.scale);
        out
    }

    /// `|∇f|_g` per node from the averaged one-sided differences.
    fn gradient_norm(&self, f: &[f64]) -> Vec<f64> {
        let m = self.grid.real_dim();
        let h = self.grid.spacing();
        (0..f.len())
            .map(|x| {
                let (dp, dm) = self.differences(f, x);
                let gi = &self.inverse[x];
                let mut e = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        e += gi[a * m + b] * (dp[a] * dp[b] + dm[a] * dm[b]);
                    }
                }
                (0.5 * e.max(0.0)).sqrt() / h
            })
            .collect()
    }
}

/// One column `y ↦ G(x, y)` of the Green's function.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenSlice {
    pub source: usize,
    pub values: Vec<f64>,
    /// `Σ G w / V`.
    pub weighted_mean: f64,
    /// `max |Δ_ω G + δ_x - 1/V|`.
    pub conservation_residual: f64,
    pub iterations: usize,
    #[serde(skip)]
    weights: Vec<f64>,
    #[serde(skip)]
    gradient: Vec<f64>,
}

/// Solver for Green slices of a fixed metric.
pub struct GreenSolver {
    metric: MetricField,
    stiffness: Stiffness,
    spectral: Spectral,
    /// Symbol of the constant-coefficient preconditioner.
    symbol: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl GreenSolver {
    pub fn new(metric: &MetricField) -> Result<Self> {
        let stiffness = Stiffness::new(metric)?;
        let grid = metric.grid;
        let m = grid.real_dim();
        let spectral = Spectral::new(grid);
        let len = grid.len() as f64;
        let mean_diag: Vec<f64> =
            (0..m).map(|a| stiffness.coeff.iter().map(|c| c[a * m + a]).sum::<f64>() / len).collect();
        let n = grid.nodes_per_axis();
        let symbol = (0..grid.len())
            .map(|i| {
                let mi = grid.multi_index(i);
                let s: f64 = (0..m)
                    .map(|a| {
                        let t = 2.0 * std::f64::consts::PI * mi[a] as f64 / n as f64;
                        mean_diag[a] * (2.0 - 2.0 * t.cos())
                    })
                    .sum();
                s * stiffness.scale
            })
            .collect();
        Ok(Self { metric: metric.clone(), stiffness, spectral, symbol, tol: 1e-15, max_iter: 5000 })
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut hat = self.spectral.forward(r);
        for (c, s) in hat.iter_mut().zip(&self.symbol) {
            *c = if *s > 0.0 { *c / *s } else { Complex64::default() };
        }
        self.spectral.inverse_real(hat)
    }

    /// Solves `Δ_ω G(x, ·) = -δ_x + 1/V_ω` with `Σ G w = 0`.
    pub fn slice(&self, source: usize) -> Result<GreenSlice> {
        let len = self.metric.grid.len();
        if source >= len {
            return Err(Error::InvalidArgument(format!("source {source} is outside the grid")));
        }
        let weights = self.metric.weights();
        let volume: f64 = weights.iter().sum();
        let mut rhs: Vec<f64> = weights.iter().map(|w| -w / volume).collect();
        rhs[source] += 1.0;
        let mut values = vec![0.0; len];
        let stats = pcg(
            &mut |v: &[f64]| self.stiffness.apply(v),
            &mut |r: &[f64]| self.precondition(r),
            &rhs,
            &mut values,
            self.tol,
            self.max_iter,
        )
        .or_else(|e| match e {
            // Round-off floor below the requested tolerance is acceptable
            // once the residual is tiny in absolute terms.
            Error::NoConvergence(_) => {
                let r = self.stiffness.apply(&values);
                let res = r.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if res < 1e-12 {
                    Ok(crate::krylov::KrylovStats { iterations: self.max_iter, relative_residual: res })
                } else {
                    Err(e)
                }
            }
            other => Err(other),
        })?;
        let mean = values.iter().zip(&weights).map(|(g, w)| g * w).sum::<f64>() / volume;
        values.iter_mut().for_each(|g| *g -= mean);
        let kg = self.stiffness.apply(&values);
        let conservation_residual = kg
            .iter()
            .zip(&rhs)
            .zip(&weights)
            .map(|((k, b), w)| ((k - b) / w).abs())
            .fold(0.0, f64::max);
        let weighted_mean = values.iter().zip(&weights).map(|(g, w)| g * w).sum::<f64>() / volume;
        let gradient = self.stiffness.gradient_norm(&values);
        Ok(GreenSlice {
            source,
            values,
            weighted_mean,
            conservation_residual,
            iterations: stats.iterations,
            weights,
            gradient,
        })
    }

    /// `Δ_ω v` at every node.
    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let w = self.metric.weights();
        self.stiffness.apply(v).iter().zip(&w).map(|(k, w)| -k / w).collect()
    }
}

/// Green slice for a single source.
pub fn green_slice(metric: &MetricField, source: usize) -> Result<GreenSlice> {
    GreenSolver::new(metric)?.slice(source)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenNorms {
    pub q: f64,
    pub s: f64,
    /// `‖G(x, ·)‖_{L^q(ω^n)}`.
    pub value_norm: f64,
    /// `‖∇G(x, ·)‖_{L^s(ω^n)}`.
    pub gradient_norm: f64,
}

/// Default exponents `(q, s)`; `q = n/(n-1) - 0.05` is infinite for
/// `n = 1`, where `q = 4` is used instead.
pub fn default_exponents(n: usize) -> (f64, f64) {
    let nf = n as f64;
    let q = if n == 1 { 4.0 } else { nf / (nf - 1.0) - 0.05 };
    (q, 2.0 * nf / (2.0 * nf - 1.0) - 0.05)
}

fn weighted_norm(values: &[f64], weights: &[f64], p: f64) -> f64 {
    values.iter().zip(weights).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

pub fn green_norms(slice: &GreenSlice, q: f64, s: f64) -> GreenNorms {
    GreenNorms {
        q,
        s,
        value_norm: weighted_norm(&slice.values, &slice.weights, q),
        gradient_norm: weighted_norm(&slice.gradient, &slice.weights, s),
    }
}

impl GreenSlice {
    /// `|∇G(x, ·)|_g` per node.
    pub fn gradient_magnitude(&self) -> &[f64] {
        &self.gradient
    }

    /// `∫ |∇G(x, ·)| ω^n`.
    pub fn gradient_l1(&self) -> f64 {
        weighted_norm(&self.gradient, &self.weights, 1.0)
    }
}

/// `(inf G(x, ·), node attaining it)`.
pub fn green_lower_bound(slice: &GreenSlice) -> (f64, usize) {
    slice
        .values
        .iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |(m, i), (j, &v)| if v < m { (v, j) } else { (m, i) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupBoundReport {
    pub a: f64,
    pub sup: f64,
    pub l1: f64,
    /// `sup v / (a + ‖v‖_{L¹})`.
    pub ratio: f64,
    /// `min (Δ_ω v + a)` over `{v > 0}`.
    pub premise_margin: f64,
}

/// Measures the constant in `sup v <= C (a + ‖v‖_{L¹})` for a mean-zero `v`
/// with `Δ_ω v >= -a` on `{v > 0}`.
pub fn sup_bound_experiment(metric: &MetricField, v: &ScalarField, a: f64) -> Result<SupBoundReport> {
    let solver = GreenSolver::new(metric)?;
    let w = metric.weights();
    let volume: f64 = w.iter().sum();
    let vals = v.values();
    let mean = vals.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / volume;
    let scale = v.sup_norm().max(1.0);
    if mean.abs() > 1e-9 * scale {
        return Err(Error::Premise(format!("v has weighted mean {mean:.3e}, expected 0")));
    }
    let lap = solver.laplacian(vals);
    let tol = 1e-9 * lap.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let premise_margin = vals
        .iter()
        .zip(&lap)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, l)| l + a)
        .fold(f64::INFINITY, f64::min);
    if premise_margin < -tol {
        return Err(Error::Premise(format!("Δv >= -a fails on {{v > 0}} by {:.3e}", -premise_margin)));
    }
    let sup = v.max();
    let l1 = weighted_norm(vals, &w, 1.0);
    let ratio = if sup <= 0.0 { 0.0 } else { sup / (a + l1) };
    Ok(SupBoundReport { a, sup, l1, ratio, premise_margin })
}

#[derive(Clone, Copy, PartialEq)]
struct Visit(f64, usize);

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Grid graph with axial edges and diagonal edges inside each `(x_j, y_j)`
/// pair, edge lengths by the trapezoid rule in the metric.
pub struct MetricGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl MetricGraph {
    pub fn new(metric: &MetricField) -> Self {
        let grid = metric.grid;
        let m = grid.real_dim();
        let h = grid.spacing();
        let mut steps: Vec<Vec<isize>> = Vec::new();
        for a in 0..m {
            for d in [-1isize, 1] {
                let mut s = vec![0; m];
                s[a] = d;
                steps.push(s);
            }
        }
        for j in 0..m / 2 {
            for dx in [-1isize, 1] {
                for dy in [-1isize, 1] {
                    let mut s = vec![0; m];
                    s[2 * j] = dx;
                    s[2 * j + 1] = dy;
                    steps.push(s);
                }
            }
        }
        let length = |node: usize, d: &[isize]| {
            let g = &metric.real[node];
            let mut q = 0.0;
            for a in 0..m {
                for b in 0..m {
                    q += g[(a, b)] * d[a] as f64 * d[b] as f64;
                }
            }
            q.sqrt() * h
        };
        let adjacency = (0..grid.len())
            .map(|x| {
                steps
                    .iter()
                    .map(|d| {
                        let mut y = x;
                        for (a, &da) in d.iter().enumerate() {
                            if da != 0 {
                                y = grid.shift(y, a, da);
                            }
                        }
                        (y, 0.5 * (length(x, d) + length(y, d)))
                    })
                    .collect()
            })
            .collect();
        Self { adjacency }
    }

    pub fn distances(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.adjacency.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Visit(0.0, source));
        while let Some(Visit(d, x)) = heap.pop() {
            if d > dist[x] {
                continue;
            }
            for &(y, len) in &self.adjacency[x] {
                let nd = d + len;
                if nd < dist[y] {
                    dist[y] = nd;
                    heap.push(Visit(nd, y));
                }
            }
        }
        dist
    }

    /// Diameter and an attaining pair. Exact over all sources when the
    /// graph has at most `exhaustive_limit` nodes, otherwise the best of
    /// repeated farthest-point sweeps.
    pub fn diameter(&self, exhaustive_limit: usize) -> (f64, usize, usize) {
        let len = self.adjacency.len();
        let farthest = |d: &[f64]| {
            d.iter().enumerate().fold((0.0f64, 0usize), |(m, i), (j, &v)| if v > m { (v, j) } else { (m, i) })
        };
        let mut best = (0.0, 0, 0);
        if len <= exhaustive_limit {
            for x in 0..len {
                let (d, y) = farthest(&self.distances(x));
                if d > best.0 {
                    best = (d, x, y);
                }
            }
            return best;
        }
        let mut x = 0;
        for _ in 0..8 {
            let (d, y) = farthest(&self.distances(x));
            if d <= best.0 {
                break;
            }
            best = (d, x, y);
            x = y;
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub x0: usize,
    pub y0: usize,
    pub true_diameter: f64,
    pub gradient_l1_x0: f64,
    pub gradient_l1_y0: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `∫|∇G(x₀,·)| + ∫|∇G(y₀,·)|` against the shortest-path diameter.
pub fn diameter_bound(metric: &MetricField) -> Result<DiameterReport> {
    let graph = MetricGraph::new(metric);
    let (true_diameter, x0, y0) = graph.diameter(4096);
    let solver = GreenSolver::new(metric)?;
    let gx = solver.slice(x0)?.gradient_l1();
    let gy = solver.slice(y0)?.gradient_l1();
    let bound = gx + gy;
    Ok(DiameterReport {
        x0,
        y0,
        true_diameter,
        gradient_l1_x0: gx,
        gradient_l1_y0: gy,
        bound,
        pass: bound >= true_diameter - 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_exponents_by_dimension() {
        assert_eq!(default_exponents(1).0, 4.0);
        assert!((default_exponents(1).1 - 1.95).abs() < 1e-15);
        assert!((default_exponents(2).0 - 1.95).abs() < 1e-15);
    }

    #[test]
    fn flat_density_is_one() {
        let m = MetricField::flat(TorusGrid::new(2, 4).unwrap());
        assert!(m.density().iter().all(|d| (d - 1.0).abs() < 1e-15));
        assert!((m.volume() - 1.0).abs() < 1e-14);
    }
}
