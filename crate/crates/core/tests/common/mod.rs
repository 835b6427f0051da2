#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use auxma::field::ScalarField;
use auxma::grid::TorusGrid;
use auxma::symplectic::AlmostComplexData;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// A non-diagonal conjugating matrix on the 2-torus.
pub fn skew_conjugator(x: &[f64]) -> DMatrix<f64> {
    let (a, b) = (2.0 * PI * x[0], 2.0 * PI * x[1]);
    DMatrix::from_row_slice(
        2,
        2,
        &[1.0 + 0.2 * a.sin(), 0.15 * b.cos(), 0.1 * (a + b).sin(), 1.0 - 0.1 * a.cos()],
    )
}

pub fn conformal_exponent(x: &[f64]) -> f64 {
    0.3 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()
}

/// `e^{w} P⁻ᵀ P⁻¹`, the compatible metric up to a constant factor.
pub fn analytic_metric(p: &dyn Fn(&[f64]) -> DMatrix<f64>, w: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let inv = p(x).try_inverse().unwrap();
    inv.transpose() * inv * w(x).exp()
}

pub fn skew_data(n: usize) -> (AlmostComplexData, ScalarField) {
    let grid = TorusGrid::new(1, n).unwrap();
    let w = ScalarField::from_fn(grid, conformal_exponent);
    AlmostComplexData::conjugated(grid, skew_conjugator, &w).unwrap()
}

/// Constant `c` with `∫ e^{w+c} dV_{g₀} = ∫ dV_{g₀}` on the nodes (n = 1).
pub fn cohomology_shift(grid: TorusGrid, p: &dyn Fn(&[f64]) -> DMatrix<f64>, w: &dyn Fn(&[f64]) -> f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for node in 0..grid.len() {
        let x = grid.coords(node);
        let vol = 1.0 / p(&x).determinant().abs();
        num += vol;
        den += w(&x).exp() * vol;
    }
    (num / den).ln()
}

/// `g̃^{ik} Γ̃^q_{ik}` from centered differences of the analytic metric
/// `e^{w + c} P⁻ᵀ P⁻¹`, as `[q][node]`.
pub fn christoffel_fd(
    grid: TorusGrid,
    p: &dyn Fn(&[f64]) -> DMatrix<f64>,
    w: &dyn Fn(&[f64]) -> f64,
) -> Vec<Vec<f64>> {
    let m = grid.real_dim();
    let h = grid.spacing();
    let c = cohomology_shift(grid, p, w);
    let shifted = |x: &[f64]| w(x) + c;
    let w = &shifted;
    let mut out = vec![vec![0.0; grid.len()]; m];
    for node in 0..grid.len() {
        let x = grid.coords(node);
        let g = analytic_metric(p, w, &x);
        let gi = g.clone().try_inverse().unwrap();
        let dg: Vec<DMatrix<f64>> = (0..m)
            .map(|a| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[a] += h;
                xm[a] -= h;
                (analytic_metric(p, w, &xp) - analytic_metric(p, w, &xm)) / (2.0 * h)
            })
            .collect();
        for q in 0..m {
            let mut v = 0.0;
            for l in 0..m {
                let mut inner = 0.0;
                for i in 0..m {
                    for k in 0..m {
                        inner += gi[(i, k)] * (dg[i][(k, l)] - 0.5 * dg[l][(i, k)]);
                    }
                }
                v += gi[(q, l)] * inner;
            }
            out[q][node] = v;
        }
    }
    out
}

/// Conformal exponent of the end-to-end family.
pub fn family_exponent(delta: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| delta * ((2.0 * PI * (x[0] + x[1])).cos() + 0.5 * (2.0 * PI * x[1]).sin())
}

/// Member of the family `J = P J₀ P⁻¹` with `P = diag(e^v, e^{-v})`,
/// `v = 0.1 sin 2πx₁`, and `g̃ = e^{w + c} g`.
pub fn family_member(n: usize, delta: f64) -> (AlmostComplexData, ScalarField) {
    let grid = TorusGrid::new(1, n).unwrap();
    let w = ScalarField::from_fn(grid, family_exponent(delta));
    AlmostComplexData::conjugated(grid, auxma::symplectic::diagonal_stretch(0.1), &w).unwrap()
}

pub fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).fold(0.0, f64::max)
}

/// Flat n = 1 Green slice from the eigenvalues `Σ (2 - 2cos θ)` of the
/// five-point stencil, by a 2D DFT.
pub fn flat_oracle(n: usize, source: (usize, usize)) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut data = vec![Complex64::new(-h * h, 0.0); n * n];
    data[source.0 * n + source.1] += 1.0;
    let rows = |d: &mut Vec<Complex64>, f: &std::sync::Arc<dyn rustfft::Fft<f64>>| {
        for r in d.chunks_mut(n) {
            f.process(r);
        }
        let mut t = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = d[i * n + j];
            }
        }
        for r in t.chunks_mut(n) {
            f.process(r);
        }
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = t[j * n + i];
            }
        }
    };
    rows(&mut data, &fwd);
    for i in 0..n {
        for j in 0..n {
            let lam = (2.0 - 2.0 * (2.0 * PI * i as f64 / n as f64).cos())
                + (2.0 - 2.0 * (2.0 * PI * j as f64 / n as f64).cos());
            data[i * n + j] = if i == 0 && j == 0 { Complex64::default() } else { data[i * n + j] / lam };
        }
    }
    rows(&mut data, &inv);
    data.iter().map(|c| c.re / (n * n) as f64).collect()
}

/// Radial solution for ρ(r): ψ' = sqrt(2 ∫_0^r t ρ(t) dt), ψ(R) = 0,
/// integrated with composite Simpson on a fine grid.
pub fn radial_oracle(rho: impl Fn(f64) -> f64, radius: f64, r: f64) -> f64 {
    let slope = |x: f64| {
        let n = 2000;
        let h = x / n as f64;
        let f = |t: f64| t * rho(t);
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        (2.0 * s * h / 3.0).sqrt()
    };
    let n = 400;
    let h = (radius - r) / n as f64;
    if h == 0.0 {
        return 0.0;
    }
    let mut s = slope(r) + slope(radius);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * slope(r + i as f64 * h);
    }
    -s * h / 3.0
}
