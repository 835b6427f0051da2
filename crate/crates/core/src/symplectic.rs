//! Almost-complex data on a real torus and the sup-bound pipeline for the
//! linear equation `Δ_{g̃} φ = 2n - tr_{g̃} g` attached to an almost-Kähler
//! metric `g̃`.
//!
//! Matrix fields act on vector components: `J` is stored as the matrix
//! `Jm` with `(J Y)^j = Jm[j][k] Y^k`, so the tensor component `J_k^j` is
//! `Jm[j][k]`. The taming form `Ω` is stored by its components `Ω_{ij}`,
//! the associated metric is `g = ½(Ω Jm + (Ω Jm)ᵀ)`, and the 2-form of `g̃`
//! is `ω̃ = g̃ Jm`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::comparison::{choose_constants, verify_nonpositive, ComparisonVariant, SymplecticExtras, PHI_TOLERANCE};
use crate::degiorgi::{lower_bound, verify_growth, GrowthCertificate, GrowthVariant};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::functionals::tau;
use crate::grid::TorusGrid;
use crate::krylov::gmres;
use crate::solver_rma::{
    abp_check, ball_volume, interior_gradient_check, solve_rma, AbpReport, BallMesh, GradientReport, RmaOptions,
};
use crate::spectral::Spectral;

pub type MatrixField = Vec<DMatrix<f64>>;

/// Structure residual tolerance.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Closedness residual tolerance for spectrally differentiated forms.
pub const CLOSED_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct AlmostComplexData {
    grid: TorusGrid,
    j: MatrixField,
    taming: MatrixField,
    g_tilde: MatrixField,
}

fn standard_j(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(m, m);
    for p in 0..m / 2 {
        j[(2 * p + 1, 2 * p)] = 1.0;
        j[(2 * p, 2 * p + 1)] = -1.0;
    }
    j
}

impl AlmostComplexData {
    pub fn new(grid: TorusGrid, j: MatrixField, taming: MatrixField, g_tilde: MatrixField) -> Result<Self> {
        let m = grid.real_dim();
        for (name, f) in [("J", &j), ("Ω", &taming), ("g̃", &g_tilde)] {
            if f.len() != grid.len() || f.iter().any(|a| a.nrows() != m || a.ncols() != m) {
                return Err(Error::InvalidArgument(format!("{name} must hold one {m}x{m} matrix per node")));
            }
        }
        Ok(Self { grid, j, taming, g_tilde })
    }

    /// Constant standard structure, its area form and `g̃ = δ`.
    pub fn standard(grid: TorusGrid) -> Self {
        let m = grid.real_dim();
        let j0 = standard_j(m);
        let len = grid.len();
        Self { grid, j: vec![j0.clone(); len], taming: vec![j0.transpose(); len], g_tilde: vec![DMatrix::identity(m, m); len] }
    }

    /// `J = P J₀ P⁻¹`, `g = P⁻ᵀ P⁻¹`, `Ω = Jᵀ g`, `g̃ = e^{w + c} g`, with
    /// the constant `c` fixing `[ω̃] = [Ω]`. Returns the data and the
    /// Calabi-Yau potential `F = n (w + c)`.
    pub fn conjugated(
        grid: TorusGrid,
        p: impl Fn(&[f64]) -> DMatrix<f64>,
        w: &ScalarField,
    ) -> Result<(Self, ScalarField)> {
        let m = grid.real_dim();
        let n = grid.complex_dim() as f64;
        let j0 = standard_j(m);
        let (mut js, mut gs, mut oms) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..grid.len() {
            let pm = p(&grid.coords(i));
            let inv = pm
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Domain(format!("conjugating matrix is singular at node {i}")))?;
            let jm = &pm * &j0 * &inv;
            let g = inv.transpose() * &inv;
            oms.push(jm.transpose() * &g);
            js.push(jm);
            gs.push(g);
        }
        let vol: Vec<f64> = gs.iter().map(|g| g.determinant().sqrt()).collect();
        let (mut lower, mut upper) = (0.0, 0.0);
        for (wv, v) in w.values().iter().zip(&vol) {
            lower += ((n - 1.0) * wv).exp() * v;
            upper += (n * wv).exp() * v;
        }
        let c = (lower / upper).ln();
        let shifted = w.map(|v| v + c);
        let g_tilde = gs.iter().zip(shifted.values()).map(|(g, wv)| g * wv.exp()).collect();
        let f = shifted.map(|v| n * v);
        Ok((Self { grid, j: js, taming: oms, g_tilde }, f))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn j(&self) -> &[DMatrix<f64>] {
        &self.j
    }

    pub fn taming(&self) -> &[DMatrix<f64>] {
        &self.taming
    }

    pub fn g_tilde(&self) -> &[DMatrix<f64>] {
        &self.g_tilde
    }

    /// `g = ½(Ω J + (Ω J)ᵀ)`.
    pub fn metric(&self) -> MatrixField {
        self.taming
            .iter()
            .zip(&self.j)
            .map(|(o, j)| {
                let a = o * j;
                (&a + a.transpose()) * 0.5
            })
            .collect()
    }

    /// `ω̃ = g̃ J`.
    pub fn omega_tilde(&self) -> MatrixField {
        self.g_tilde.iter().zip(&self.j).map(|(g, j)| g * j).collect()
    }

    /// Same data translated by whole grid steps.
    pub fn translate(&self, steps: &[isize]) -> Self {
        let shift = |f: &MatrixField| -> MatrixField {
            (0..self.grid.len())
                .map(|i| {
                    let mut src = i;
                    for (a, &d) in steps.iter().enumerate() {
                        src = self.grid.shift(src, a, -d);
                    }
                    f[src].clone()
                })
                .collect()
        };
        Self { grid: self.grid, j: shift(&self.j), taming: shift(&self.taming), g_tilde: shift(&self.g_tilde) }
    }
}

/// `[axis][node]` spectral derivatives of a matrix field.
fn matrix_derivatives(spectral: &Spectral, field: &[DMatrix<f64>]) -> Vec<MatrixField> {
    let m = spectral.grid().real_dim();
    let (r, c) = (field[0].nrows(), field[0].ncols());
    let mut out = vec![vec![DMatrix::zeros(r, c); field.len()]; m];
    for a in 0..r {
        for b in 0..c {
            let values: Vec<f64> = field.iter().map(|x| x[(a, b)]).collect();
            for (axis, d) in spectral.gradient(&values).into_iter().enumerate() {
                for (node, v) in d.into_iter().enumerate() {
                    out[axis][node][(a, b)] = v;
                }
            }
        }
    }
    out
}

/// `max |∂_l w_ij + ∂_j w_li + ∂_i w_jl|` over nodes and index triples.
fn exterior_residual(spectral: &Spectral, form: &[DMatrix<f64>]) -> f64 {
    let m = spectral.grid().real_dim();
    let d = matrix_derivatives(spectral, form);
    let mut worst = 0.0f64;
    for node in 0..form.len() {
        for i in 0..m {
            for j in i + 1..m {
                for l in j + 1..m {
                    let v = d[l][node][(i, j)] + d[j][node][(l, i)] + d[i][node][(j, l)];
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}

fn max_entry(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `max |J² + I|`.
    pub j_square: f64,
    /// Smallest eigenvalue of the symmetrized `Ω(·, J·)`.
    pub taming_margin: f64,
    pub taming_antisymmetry: f64,
    pub d_taming: f64,
    /// `max |Jᵀ g̃ J - g̃|`.
    pub compatibility: f64,
    pub g_tilde_min_eigenvalue: f64,
    pub omega_tilde_antisymmetry: f64,
    pub d_omega_tilde: f64,
    pub structure_ok: bool,
    pub closed: bool,
    pub almost_kahler: bool,
}

pub fn validate(data: &AlmostComplexData) -> ValidationReport {
    let m = data.grid.real_dim();
    let id = DMatrix::<f64>::identity(m, m);
    let spectral = Spectral::new(data.grid);
    let j_square = data.j.iter().map(|j| max_entry(&(j * j + &id))).fold(0.0, f64::max);
    let taming_margin = data
        .taming
        .iter()
        .zip(&data.j)
        .map(|(o, j)| min_eigenvalue(&(o * j)))
        .fold(f64::INFINITY, f64::min);
    let taming_antisymmetry = data.taming.iter().map(|o| max_entry(&(o + o.transpose()))).fold(0.0, f64::max);
    let compatibility = data
        .j
        .iter()
        .zip(&data.g_tilde)
        .map(|(j, g)| max_entry(&(j.transpose() * g * j - g)))
        .fold(0.0, f64::max);
    let g_tilde_min_eigenvalue = data.g_tilde.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min);
    let omega = data.omega_tilde();
    let omega_tilde_antisymmetry = omega.iter().map(|o| max_entry(&(o + o.transpose()))).fold(0.0, f64::max);
    let d_taming = exterior_residual(&spectral, &data.taming);
    let d_omega_tilde = exterior_residual(&spectral, &omega);
    let structure_ok = j_square <= STRUCTURE_TOL
        && taming_margin > 0.0
        && taming_antisymmetry <= STRUCTURE_TOL
        && compatibility <= STRUCTURE_TOL
        && g_tilde_min_eigenvalue > 0.0
        && omega_tilde_antisymmetry <= STRUCTURE_TOL;
    let closed = d_taming <= CLOSED_TOL && d_omega_tilde <= CLOSED_TOL;
    ValidationReport {
        j_square,
        taming_margin,
        taming_antisymmetry,
        d_taming,
        compatibility,
        g_tilde_min_eigenvalue,
        omega_tilde_antisymmetry,
        d_omega_tilde,
        structure_ok,
        closed,
        almost_kahler: structure_ok && closed,
    }
}

/// Per-node `a_l = J_k^j ∂_l J_j^k` and `B^q_{ik} = J_j^q ∂_i J_k^j`.
struct JDerivatives {
    trace: Vec<Vec<f64>>,
    tensor: Vec<Vec<DMatrix<f64>>>,
}

fn j_derivatives(data: &AlmostComplexData) -> JDerivatives {
    let spectral = Spectral::new(data.grid);
    let m = data.grid.real_dim();
    let dj = matrix_derivatives(&spectral, &data.j);
    let len = data.grid.len();
    let mut trace = vec![vec![0.0; m]; len];
    let mut tensor = vec![Vec::with_capacity(m); len];
    for node in 0..len {
        let j = &data.j[node];
        for i in 0..m {
            // (J ∂_i J)[q][k] = Σ_j Jm[q][j] ∂_i Jm[j][k]
            let b = j * &dj[i][node];
            trace[node][i] = b.trace();
            tensor[node].push(b);
        }
    }
    JDerivatives { trace, tensor }
}

/// `-½ g̃^{ql} J_k^j ∂_l J_j^k - g̃^{ik} J_j^q ∂_i J_k^j` per node, as
/// `[q][node]`. Requires validated almost-Kähler data.
pub fn christoffel_contraction(data: &AlmostComplexData, validation: &ValidationReport) -> Result<Vec<Vec<f64>>> {
    if !validation.almost_kahler {
        return Err(Error::Premise("the contraction identity needs validated almost-Kähler data".into()));
    }
    Ok(contraction_from_j(data, &j_derivatives(data)))
}

fn contraction_from_j(data: &AlmostComplexData, jd: &JDerivatives) -> Vec<Vec<f64>> {
    let m = data.grid.real_dim();
    let len = data.grid.len();
    let mut out = vec![vec![0.0; len]; m];
    for node in 0..len {
        let inv = data.g_tilde[node].clone().try_inverse().expect("validated metric is invertible");
        for q in 0..m {
            let mut v = 0.0;
            for l in 0..m {
                v -= 0.5 * inv[(q, l)] * jd.trace[node][l];
            }
            for i in 0..m {
                for k in 0..m {
                    v -= inv[(i, k)] * jd.tensor[node][i][(q, k)];
                }
            }
            out[q][node] = v;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CjReport {
    /// `sup (|J_k^j ∂J_j^k|_g + |J_j^q ∂_i J_k^j|_g)`.
    pub c_j: f64,
    pub trace_part: f64,
    pub tensor_part: f64,
    /// `sup |g̃^{ik} Γ̃^q_{ik}|_g / tr_{g̃} g`, the smallest constant that
    /// works for every gradient.
    pub sharp: f64,
    /// Eigenvalue range of `g` on the chart.
    pub chart_min: f64,
    pub chart_max: f64,
}

pub fn measure_cj(data: &AlmostComplexData) -> Result<CjReport> {
    let m = data.grid.real_dim();
    let g = data.metric();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for gm in &g {
        for l in gm.clone().symmetric_eigenvalues().iter() {
            lo = lo.min(*l);
            hi = hi.max(*l);
        }
    }
    if lo < 0.5 || hi > 2.0 {
        return Err(Error::Premise(format!(
            "chart condition ½δ <= g <= 2δ fails: eigenvalues in [{lo:.4}, {hi:.4}]"
        )));
    }
    let jd = j_derivatives(data);
    let contraction = contraction_from_j(data, &jd);
    let (mut trace_part, mut tensor_part, mut c_j, mut sharp) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for node in 0..data.grid.len() {
        let gn = &g[node];
        let gi = gn.clone().try_inverse().expect("chart metric is invertible");
        let a = &jd.trace[node];
        let mut ta = 0.0;
        for l in 0..m {
            for k in 0..m {
                ta += gi[(l, k)] * a[l] * a[k];
            }
        }
        let ta = ta.max(0.0).sqrt();
        let mut tb = 0.0;
        let b = &jd.tensor[node];
        for q in 0..m {
            for q2 in 0..m {
                if gn[(q, q2)] == 0.0 {
                    continue;
                }
                for i in 0..m {
                    for i2 in 0..m {
                        if gi[(i, i2)] == 0.0 {
                            continue;
                        }
                        for k in 0..m {
                            for k2 in 0..m {
                                tb += gn[(q, q2)] * gi[(i, i2)] * gi[(k, k2)] * b[i][(q, k)] * b[i2][(q2, k2)];
                            }
                        }
                    }
                }
            }
        }
        let tb = tb.max(0.0).sqrt();
        trace_part = trace_part.max(ta);
        tensor_part = tensor_part.max(tb);
        c_j = c_j.max(ta + tb);
        let gti = data.g_tilde[node].clone().try_inverse().expect("metric is invertible");
        let tr = (0..m).flat_map(|i| (0..m).map(move |k| (i, k))).map(|(i, k)| gti[(i, k)] * gn[(i, k)]).sum::<f64>();
        let mut vn = 0.0;
        for q in 0..m {
            for q2 in 0..m {
                vn += gn[(q, q2)] * contraction[q][node] * contraction[q2][node];
            }
        }
        sharp = sharp.max(vn.max(0.0).sqrt() / tr);
    }
    Ok(CjReport { c_j, trace_part, tensor_part, sharp, chart_min: lo, chart_max: hi })
}

/// Laplace-Beltrami operator of a metric field in divergence form with
/// spectral derivatives.
struct LaplaceBeltrami {
    spectral: Spectral,
    /// `√det g̃ · g̃⁻¹` row-major per node.
    coeff: Vec<Vec<f64>>,
    density: Vec<f64>,
    m: usize,
    precond_scale: f64,
}

impl LaplaceBeltrami {
    fn new(grid: TorusGrid, metric: &[DMatrix<f64>]) -> Result<Self> {
        let m = grid.real_dim();
        let mut coeff = Vec::with_capacity(metric.len());
        let mut density = Vec::with_capacity(metric.len());
        let mut trace = 0.0;
        for g in metric {
            let det = g.determinant();
            if !(det > 0.0) {
                return Err(Error::Domain("metric determinant must be positive".into()));
            }
            let inv = g.clone().try_inverse().ok_or_else(|| Error::Domain("singular metric".into()))?;
            trace += inv.trace() / m as f64;
            let w = det.sqrt();
            density.push(w);
            coeff.push((inv * w).transpose().as_slice().to_vec());
        }
        let precond_scale = trace / metric.len() as f64;
        Ok(Self { spectral: Spectral::new(grid), coeff, density, m, precond_scale })
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let grad = self.spectral.gradient(f);
        let mut out = vec![0.0; f.len()];
        for i in 0..self.m {
            let flux: Vec<f64> = (0..f.len())
                .map(|x| (0..self.m).map(|j| self.coeff[x][i * self.m + j] * grad[j][x]).sum())
                .collect();
            let d = self.spectral.derivative(&self.spectral.forward(&flux), i);
            for (o, v) in out.iter_mut().zip(d) {
                *o += v;
            }
        }
        out.iter_mut().zip(&self.density).for_each(|(o, w)| *o /= w);
        out
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        self.spectral.solve_poisson(r).into_iter().map(|v| v / self.precond_scale).collect()
    }
}

#[derive(Clone, Debug)]
pub struct LinearPhi {
    pub phi: ScalarField,
    /// `max |Δ_{g̃} φ - (2n - tr_{g̃} g)|`.
    pub residual: f64,
    /// Weighted mean of the right side against `dV_{g̃}`.
    pub compatibility: f64,
    pub iterations: usize,
}

/// Solves `Δ_{g̃} φ = 2n - tr_{g̃} g` with `max φ = 0`.
pub fn solve_linear_phi(data: &AlmostComplexData) -> Result<LinearPhi> {
    let grid = data.grid;
    let m = grid.real_dim();
    let g = data.metric();
    let op = LaplaceBeltrami::new(grid, &data.g_tilde)?;
    let mut rhs: Vec<f64> = data
        .g_tilde
        .iter()
        .zip(&g)
        .map(|(gt, gm)| {
            let inv = gt.clone().try_inverse().expect("positive metric");
            m as f64 - inv.component_mul(gm).sum()
        })
        .collect();
    let total: f64 = op.density.iter().sum();
    let compatibility = rhs.iter().zip(&op.density).map(|(b, w)| b * w).sum::<f64>() / total;
    let scale = rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    if compatibility.abs() > 1e-8 * scale {
        return Err(Error::Compatibility(format!(
            "right side has mean {compatibility:.3e} against dV of the metric"
        )));
    }
    let original = rhs.clone();
    rhs.iter_mut().for_each(|b| *b -= compatibility);
    // Modes that are constant or Nyquist on every axis lie outside the discrete range.
    let nodes = grid.nodes_per_axis();
    let weighted: Vec<f64> = rhs.iter().zip(&op.density).map(|(b, w)| b * w).collect();
    let hat = op.spectral.forward(&weighted);
    let projected = op.spectral.apply(&hat, |mi| {
        if mi.iter().all(|&k| k == 0 || 2 * k == nodes) { Complex64::new(0.0, 0.0) } else { Complex64::new(1.0, 0.0) }
    });
    rhs = projected.iter().zip(&op.density).map(|(v, w)| v / w).collect();
    let mut x = vec![0.0; grid.len()];
    let atol = 1e-12 * (grid.len() as f64).sqrt();
    let stats = gmres(
        &mut |v: &[f64]| op.apply(v),
        &mut |r: &[f64]| op.precondition(r),
        &rhs,
        &mut x,
        0.0,
        atol,
        60,
        3000,
    )?;
    let lx = op.apply(&x);
    let residual = lx.iter().zip(&original).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut phi = ScalarField::new(grid, x)?;
    phi.normalize_max_zero();
    Ok(LinearPhi { phi, residual, compatibility, iterations: stats.iterations })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainnewOptions {
    pub r0: f64,
    /// Levels `s` for the comparison function, as fractions of `s₀`.
    pub level_fractions: Vec<f64>,
    pub profile_levels: usize,
    pub radial_order: usize,
    pub angular: usize,
    /// `ℓ = ell_factor / s`.
    pub ell_factor: f64,
    /// Hypothesis bound `K` on `∫ e^{2F} dV_g`; the measured value when absent.
    pub k_bound: Option<f64>,
    pub epsilon_scale: f64,
    pub phi_tolerance: f64,
    pub rma: RmaOptions,
}

impl Default for MainnewOptions {
    fn default() -> Self {
        Self {
            r0: 0.2,
            level_fractions: vec![0.25, 0.5, 1.0],
            profile_levels: 64,
            radial_order: 41,
            angular: 32,
            ell_factor: 1.0,
            k_bound: None,
            epsilon_scale: 1.0,
            phi_tolerance: PHI_TOLERANCE,
            rma: RmaOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub s: f64,
    pub ell: f64,
    pub a_s_ell: f64,
    pub abp: AbpReport,
    pub gradient: GradientReport,
    pub rma_residual: f64,
    pub convexity_margin: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub phi_max: f64,
    pub phi_tolerance: f64,
    pub pass: bool,
    /// `max (-u_s) / (ε (-ψ + Λ)^b)`; halving `ε` breaks `Φ <= 0` exactly
    /// when this exceeds ½.
    pub critical_epsilon_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub s: Vec<f64>,
    /// `∫_{Ω_s} e^{2F} det g dx`.
    pub phi: Vec<f64>,
    /// `∫_{Ω_s} (-u_s) e^{2F} det g dx`.
    pub excess: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainnewReport {
    pub n: usize,
    pub r0: f64,
    pub validation: ValidationReport,
    pub cj: CjReport,
    pub linear_residual: f64,
    pub calabi_yau_residual: f64,
    pub normalization_residual: f64,
    pub x0: Vec<f64>,
    pub x0_node: usize,
    pub phi_min: f64,
    pub eta: f64,
    pub s0: f64,
    pub k: f64,
    pub k_bound: f64,
    pub l1_norm: f64,
    pub sup_abs_phi: f64,
    pub levels: Vec<LevelReport>,
    pub c2: f64,
    pub c2_form: String,
    pub c_ng: f64,
    pub c1: f64,
    pub lambda_max: f64,
    pub c3: f64,
    pub c4: f64,
    pub c0: f64,
    pub phi_s0: f64,
    pub a_s0: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub bound_rhs: f64,
    pub profile: ProfileTable,
    pub growth: GrowthCertificate,
    pub stages: Vec<StageReport>,
    pub pass: bool,
}

impl MainnewReport {
    /// First failing stage as an error.
    pub fn check(&self) -> Result<()> {
        match self.stages.iter().find(|s| !s.pass) {
            Some(s) => Err(Error::Stage { stage: s.stage.clone(), detail: s.detail.clone() }),
            None => Ok(()),
        }
    }
}

fn stage_err(stage: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Stage { stage: stage.to_string(), detail: e.to_string() }
}

/// Minimum of the trigonometric interpolant near the best node.
fn polished_minimum(spectral: &Spectral, phi: &ScalarField) -> (Vec<f64>, f64, usize) {
    let grid = *phi.grid();
    let node = phi.argmin();
    let hat = spectral.forward(phi.values());
    let mut x = grid.coords(node);
    let mut best = phi.values()[node];
    let m = grid.real_dim();
    for _ in 0..20 {
        let (_, grad, hess) = spectral.evaluate(&hat, &x);
        let hm = DMatrix::from_fn(m, m, |a, b| hess[a][b]);
        let Some(step) = hm.clone().cholesky().map(|c| c.solve(&nalgebra::DVector::from_column_slice(&grad))) else {
            break;
        };
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a - d).collect();
        let v = spectral.interpolate(&hat, &trial);
        if !(v <= best) || step.norm() > grid.spacing() {
            break;
        }
        best = v;
        x = trial;
        if step.norm() < 1e-14 {
            break;
        }
    }
    (x, best, node)
}

/// Runs the sup-bound pipeline for `φ` on validated almost-Kähler data
/// with Calabi-Yau potential `f`.
pub fn run_mainnew(data: &AlmostComplexData, f: &ScalarField, opts: &MainnewOptions) -> Result<MainnewReport> {
    let grid = data.grid;
    let m = grid.real_dim();
    let n = grid.complex_dim();
    let nf = n as f64;
    let two_n = 2.0 * nf;
    let mut stages = Vec::new();
    let mut push = |stage: &str, pass: bool, detail: String| {
        stages.push(StageReport { stage: stage.to_string(), pass, detail });
    };
    if !(opts.r0 > 0.0 && 2.0 * opts.r0 < 0.5) {
        return Err(Error::InvalidArgument(format!("r0 = {} must satisfy 0 < 2 r0 < 1/2", opts.r0)));
    }
    if opts.level_fractions.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::InvalidArgument("level fractions must lie in (0, 1]".into()));
    }

    let validation = validate(data);
    if !validation.almost_kahler {
        return Err(Error::Stage { stage: "validate".into(), detail: format!("{validation:?}") });
    }
    push("validate", true, "J² = -I, taming, compatibility and closedness hold".into());

    let g = data.metric();
    let det_g: Vec<f64> = g.iter().map(|x| x.determinant()).collect();
    let sqrt_det_g: Vec<f64> = det_g.iter().map(|d| d.sqrt()).collect();
    let cell = grid.cell_volume();
    let cy = data
        .g_tilde
        .iter()
        .zip(&det_g)
        .zip(f.values())
        .map(|((gt, dg), fv)| ((gt.determinant() - (2.0 * fv).exp() * dg) / dg).abs())
        .fold(0.0, f64::max);
    push("calabi_yau", cy <= 1e-10, format!("max |det g̃ - e^(2F) det g| / det g = {cy:.3e}"));
    let taming_volume: f64 = data.taming.iter().map(|o| o.determinant().max(0.0).sqrt()).sum::<f64>() * cell;
    let ef_volume: f64 = f.values().iter().zip(&sqrt_det_g).map(|(fv, v)| fv.exp() * v).sum::<f64>() * cell;
    let normalization_residual = (ef_volume - taming_volume).abs() / taming_volume;
    push(
        "normalization",
        normalization_residual <= 1e-10,
        format!("|∫e^F dV_g - ∫Ω^n/n!| relative = {normalization_residual:.3e}"),
    );

    let cj = measure_cj(data).map_err(stage_err("chart"))?;
    push("chart", true, format!("g eigenvalues in [{:.4}, {:.4}], C_J = {:.6}", cj.chart_min, cj.chart_max, cj.c_j));

    let lin = solve_linear_phi(data).map_err(stage_err("linear_phi"))?;
    push("linear_phi", lin.residual <= 1e-10, format!("residual {:.3e}", lin.residual));
    let phi = lin.phi.clone();

    let spectral = Spectral::new(grid);
    let (x0, phi_min, x0_node) = polished_minimum(&spectral, &phi);
    let weight: Vec<f64> = f.values().iter().zip(&det_g).map(|(fv, dg)| (2.0 * fv).exp() * dg).collect();
    let k: f64 = f.values().iter().zip(&sqrt_det_g).map(|(fv, v)| (2.0 * fv).exp() * v).sum::<f64>() * cell;
    let k_bound = opts.k_bound.unwrap_or(k);
    push("energy", k <= k_bound * (1.0 + 1e-12), format!("∫e^(2F) dV_g = {k:.6} against K = {k_bound:.6}"));
    let l1_norm: f64 =
        phi.values().iter().zip(f.values()).zip(&sqrt_det_g).map(|((p, fv), v)| p.abs() * (2.0 * fv).exp() * v).sum::<f64>()
            * cell;
    let sup_abs_phi = -phi_min;

    let r0 = opts.r0;
    let eta = 1.0 / (10.0 * (4.0 + 2.0 * cj.c_j * r0));
    let s0 = eta * r0 * r0;

    // Torus nodes inside the ball, their offsets and weights.
    let offsets: Vec<(usize, f64)> = (0..grid.len())
        .filter_map(|i| {
            let d = grid.displacement(&x0, &grid.coords(i));
            let r2: f64 = d.iter().map(|v| v * v).sum();
            (r2 < 4.0 * r0 * r0).then_some((i, r2))
        })
        .collect();
    let u_node = |i: usize, r2: f64, s: f64| phi.values()[i] - phi_min + eta * r2 - s;

    // Containment and lower bound of u_s on the torus nodes.
    let mut contained = true;
    let mut lowest = f64::INFINITY;
    for &(i, r2) in &offsets {
        let u = u_node(i, r2, s0);
        lowest = lowest.min(u + s0);
        if u < 0.0 && r2 >= r0 * r0 {
            contained = false;
        }
    }
    push("containment", contained, format!("Ω_s inside B(x0, r0) for s <= s0 = {s0:.4e}"));
    push("u_s_lower", lowest >= -1e-12, format!("min (u_s + s) = {lowest:.3e}"));

    // Profile over levels in (0, s0].
    let count = opts.profile_levels.max(2);
    let levels: Vec<f64> = (1..=count).map(|i| s0 * i as f64 / count as f64).collect();
    let mut prof_phi = Vec::with_capacity(count);
    let mut prof_a = Vec::with_capacity(count);
    for &s in &levels {
        let (mut p, mut a) = (0.0, 0.0);
        for &(i, r2) in &offsets {
            let u = u_node(i, r2, s);
            if u < 0.0 {
                p += weight[i] * cell;
                a += -u * weight[i] * cell;
            }
        }
        prof_phi.push(p);
        prof_a.push(a);
    }

    // Real Monge-Ampère problems on B(x0, 2r0).
    let mesh = BallMesh::disk(2.0 * r0, opts.radial_order, opts.angular).map_err(stage_err("ball_mesh"))?;
    let points = mesh.points();
    let hat_phi = spectral.forward(phi.values());
    let hat_f = spectral.forward(f.values());
    let hat_det = spectral.forward(&det_g);
    let at = |p: &[f64]| -> Vec<f64> { x0.iter().zip(p).map(|(a, b)| a + b).collect() };
    let ball_phi: Vec<f64> = points.iter().map(|p| spectral.interpolate(&hat_phi, &at(p)) - phi_min).collect();
    let ball_weight: Vec<f64> = points
        .iter()
        .map(|p| {
            let x = at(p);
            (2.0 * spectral.interpolate(&hat_f, &x)).exp() * spectral.interpolate(&hat_det, &x)
        })
        .collect();
    let beta = ball_volume(m);
    struct Solved {
        s: f64,
        ell: f64,
        a: f64,
        u: Vec<f64>,
        psi: Vec<f64>,
        abp: AbpReport,
        grad: GradientReport,
        residual: f64,
        margin: f64,
    }
    let mut solved = Vec::new();
    for &t in &opts.level_fractions {
        let s = t * s0;
        let ell = opts.ell_factor / s;
        let u: Vec<f64> = points
            .iter()
            .zip(&ball_phi)
            .map(|(p, ph)| ph + eta * p.iter().map(|v| v * v).sum::<f64>() - s)
            .collect();
        let dens: Vec<f64> = u.iter().zip(&ball_weight).map(|(uv, w)| tau(ell, -uv) * w).collect();
        let a = mesh.integrate(&dens);
        let rho: Vec<f64> = dens.iter().map(|d| d / a).collect();
        let sol = solve_rma(&mesh, &rho, &opts.rma).map_err(stage_err("real_monge_ampere"))?;
        let abp = abp_check(&sol);
        let grad = interior_gradient_check(&sol);
        solved.push(Solved {
            s,
            ell,
            a,
            u,
            psi: sol.psi.values.clone(),
            abp,
            grad,
            residual: sol.residual,
            margin: sol.convexity_margin,
        });
    }
    let printed = solved.iter().all(|x| x.abp.holds_printed && x.grad.observed <= x.grad.bound_printed);
    let dimensional = solved.iter().all(|x| x.abp.holds_dimensional && x.grad.observed <= x.grad.bound_dimensional);
    let (c2, c2_form) = if printed {
        (4.0 / beta, "4/β".to_string())
    } else {
        (4.0 / beta.powf(1.0 / m as f64), "4/β^(1/m)".to_string())
    };
    push(
        "abp_gradient",
        printed || dimensional,
        format!("C2 = {c2:.6} ({c2_form}); printed form holds: {printed}, dimensional form holds: {dimensional}"),
    );
    for x in &solved {
        push(
            "real_monge_ampere",
            x.residual <= opts.rma.tol * x.psi.len() as f64 && x.margin > 0.0,
            format!("s = {:.4e}: residual {:.3e}, convexity margin {:.3e}", x.s, x.residual, x.margin),
        );
    }

    let c_ng = s0 * sqrt_det_g.iter().copied().fold(0.0, f64::max);
    let c1 = 2.0 * c_ng * k_bound;
    let lambda_max = two_n / (1.0 + two_n) * (10.0 * cj.c_j * c2).powf(two_n + 1.0) * c1;
    let cn = ((two_n + 1.0) / two_n).powf(two_n / (two_n + 1.0));
    let c3 = cn * (c2 * r0 + lambda_max).powf(two_n / (two_n + 1.0));
    let c4 = c3.powf((two_n + 1.0) / two_n);

    let mut level_reports = Vec::new();
    for x in &solved {
        let consts = choose_constants(
            ComparisonVariant::Symplectic,
            1.0,
            n,
            1.0,
            x.a,
            Some(SymplecticExtras { c_j: cj.c_j, c2 }),
        )
        .map_err(stage_err("constants"))?;
        let eps = consts.epsilon * opts.epsilon_scale;
        let values: Vec<f64> =
            x.psi.iter().zip(&x.u).map(|(p, u)| -eps * (-p + consts.lambda).powf(consts.b) - u).collect();
        let u_sup = x.u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let psi_sup = x.psi.iter().map(|p| eps * (-p + consts.lambda).powf(consts.b)).fold(0.0, f64::max);
        let report = verify_nonpositive(&values, u_sup, psi_sup, opts.phi_tolerance);
        let critical = x
            .psi
            .iter()
            .zip(&x.u)
            .filter(|(_, u)| **u < 0.0)
            .map(|(p, u)| -u / (consts.epsilon * (-p + consts.lambda).powf(consts.b)))
            .fold(0.0, f64::max);
        push(
            "a_bounded",
            x.a <= c1,
            format!("s = {:.4e}: A = {:.4e} against C1 = {c1:.4e}", x.s, x.a),
        );
        push(
            "lambda_bounded",
            consts.lambda <= lambda_max * (1.0 + 1e-12),
            format!("Λ = {:.4e} against {lambda_max:.4e}", consts.lambda),
        );
        push(
            "comparison",
            report.pass,
            format!("s = {:.4e}: max Φ = {:.3e}, critical ε factor {critical:.4}", x.s, report.max_value),
        );
        level_reports.push(LevelReport {
            s: x.s,
            ell: x.ell,
            a_s_ell: x.a,
            abp: x.abp.clone(),
            gradient: x.grad.clone(),
            rma_residual: x.residual,
            convexity_margin: x.margin,
            lambda: consts.lambda,
            epsilon: eps,
            phi_max: report.max_value,
            phi_tolerance: report.tolerance * report.slack_scale,
            pass: report.pass,
            critical_epsilon_factor: critical,
        });
    }

    let delta = 1.0 / two_n;
    let growth = verify_growth(&levels, &prof_phi, GrowthVariant::Increasing, c4, delta).map_err(stage_err("growth"))?;
    push(
        "growth",
        growth.pass,
        format!("C4 = {c4:.4e}, minimal constant {:.4e}", growth.minimal_constant),
    );
    let excess_ok = prof_a.iter().zip(&prof_phi).all(|(a, p)| *a <= c4 * p.powf(1.0 + delta) * (1.0 + 1e-12));
    push("excess", excess_ok, "A_s <= C4 φ(s)^(1+1/2n) on every level".into());
    let c0 = lower_bound(c4, delta, s0).map_err(stage_err("lower_bound"))?;
    let phi_s0 = *prof_phi.last().expect("levels are nonempty");
    let a_s0 = *prof_a.last().expect("levels are nonempty");
    push("lower_bound", phi_s0 >= c0, format!("φ(s0) = {phi_s0:.4e} against c0 = {c0:.4e}"));
    let c5 = c4 * (2f64.powf(two_n) * beta * k_bound).powf(1.0 + delta);
    push("a_s0", a_s0 <= c5, format!("A_s0 = {a_s0:.4e} against C5 = {c5:.4e}"));
    let local: f64 = offsets
        .iter()
        .filter(|&&(i, r2)| u_node(i, r2, s0) < 0.0)
        .map(|&(i, _)| -phi.values()[i] * weight[i] * cell)
        .sum();
    let lhs = -phi_min * phi_s0;
    let rhs = s0 * phi_s0 + local + c5;
    push("local_integral", lhs <= rhs, format!("{lhs:.4e} <= {rhs:.4e}"));
    let c6 = s0 + c5 / c0;
    let c7 = sqrt_det_g.iter().copied().fold(0.0, f64::max) / c0;
    let c8 = c6.max(c7);
    let bound_rhs = c8 * (1.0 + l1_norm);
    push(
        "sup_bound",
        sup_abs_phi <= c6 + c7 * l1_norm && sup_abs_phi <= bound_rhs,
        format!("sup|φ| = {sup_abs_phi:.4e} <= C8 (1 + ‖φ‖) = {bound_rhs:.4e}"),
    );

    let pass = stages.iter().all(|s| s.pass);
    Ok(MainnewReport {
        n,
        r0,
        validation,
        cj,
        linear_residual: lin.residual,
        calabi_yau_residual: cy,
        normalization_residual,
        x0,
        x0_node,
        phi_min,
        eta,
        s0,
        k,
        k_bound,
        l1_norm,
        sup_abs_phi,
        levels: level_reports,
        c2,
        c2_form,
        c_ng,
        c1,
        lambda_max,
        c3,
        c4,
        c0,
        phi_s0,
        a_s0,
        c5,
        c6,
        c7,
        c8,
        bound_rhs,
        profile: ProfileTable { s: levels, phi: prof_phi, excess: prof_a },
        growth,
        stages,
        pass,
    })
}

/// Conjugating matrix `diag(e^v, e^{-v})` with `v = a sin 2πx₁`, giving
/// `J = [[0, -e^{2v}], [e^{-2v}, 0]]` and `g = diag(e^{-2v}, e^{2v})`.
pub fn diagonal_stretch(a: f64) -> impl Fn(&[f64]) -> DMatrix<f64> {
    move |x: &[f64]| {
        let v = a * (2.0 * PI * x[0]).sin();
        DMatrix::from_row_slice(2, 2, &[v.exp(), 0.0, 0.0, (-v).exp()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_data_is_almost_kahler() {
        let data = AlmostComplexData::standard(TorusGrid::new(1, 8).unwrap());
        let v = validate(&data);
        assert!(v.almost_kahler);
        assert!(v.j_square <= 1e-12 && v.d_taming <= 1e-12 && v.d_omega_tilde <= 1e-12);
        let g = data.metric();
        assert!((&g[0] - DMatrix::<f64>::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn broken_square_is_flagged() {
        let grid = TorusGrid::new(1, 4).unwrap();
        let mut data = AlmostComplexData::standard(grid);
        data.j[3][(0, 0)] = 0.1;
        assert!(!validate(&data).structure_ok);
    }
}
