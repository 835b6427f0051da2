//! Damped Newton solver for `f(λ[I + i∂∂̄φ]) = k` on the flat torus.
//!
//! The equation is solved in logarithmic form together with a free
//! multiplicative constant on `k`, which absorbs the one-dimensional
//! cokernel of the linearisation. Linear steps use GMRES preconditioned by
//! the inverse flat Laplacian. The returned potential has maximum zero.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::TorusGrid;
use crate::hermitian::{complex_from_real, hermitian_eigen, Hermitian};
use crate::krylov::gmres;
use crate::operator::{binomial, OperatorKind, OperatorSpec};
use crate::spectral::{RealHessian, Spectral};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Max-norm tolerance on `f(λ) - k`.
    pub tol: f64,
    pub max_newton: usize,
    /// Continuation parameters in `(0, 1]`, ending at 1.
    pub continuation: Vec<f64>,
    /// Number of times a failed continuation step may be bisected.
    pub max_refinements: usize,
    /// Floor of the GMRES relative tolerance; each Newton step asks for
    /// no more than the current residual.
    pub linear_tol: f64,
    pub gmres_restart: usize,
    pub max_linear: usize,
    pub max_halvings: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_newton: 40,
            continuation: vec![0.25, 0.5, 0.75, 1.0],
            max_refinements: 8,
            linear_tol: 1e-12,
            gmres_restart: 80,
            max_linear: 4000,
            max_halvings: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub positivity_margin: f64,
    pub continuation_steps: Vec<f64>,
    pub linear_iterations: usize,
    /// Factor applied to the caller's density; 1 when it was compatible.
    pub rescale_factor: f64,
    pub rescaled: bool,
}

/// Density normalised so that `mean(e^{n F_ω}) = 1`, with `k = c_ω e^{F_ω}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedDensity {
    pub f_omega: ScalarField,
    pub c_omega: f64,
    pub k: ScalarField,
}

pub fn normalize_density(f_raw: &ScalarField) -> NormalizedDensity {
    let n = f_raw.grid().complex_dim() as f64;
    // log-mean-exp, shifted for stability
    let top = f_raw.max();
    let mean = f_raw.values().iter().map(|&f| (n * (f - top)).exp()).sum::<f64>() / f_raw.values().len() as f64;
    let shift = top + mean.ln() / n;
    let f_omega = f_raw.map(|f| f - shift);
    let c_omega = shift.exp();
    let k = f_raw.map(f64::exp);
    NormalizedDensity { f_omega, c_omega, k }
}

/// Pointwise data of the current iterate.
struct NodeState {
    log_f: Vec<f64>,
    /// Packed real coefficients of the linearised operator.
    coeff: Vec<Vec<f64>>,
    /// Distance to the cone boundary; only computed without coefficients.
    margin: f64,
    mean_trace: f64,
}

pub(crate) struct Workspace {
    pub(crate) spectral: Spectral,
    op: OperatorSpec,
    grid: TorusGrid,
}

impl Workspace {
    pub(crate) fn new(op: &OperatorSpec, grid: TorusGrid) -> Result<Self> {
        if op.n != grid.complex_dim() {
            return Err(Error::InvalidArgument(format!(
                "operator dimension {} does not match grid dimension {}",
                op.n,
                grid.complex_dim()
            )));
        }
        Ok(Self { spectral: Spectral::new(grid), op: op.clone(), grid })
    }

    fn hessian(&self, phi: &[f64]) -> RealHessian {
        self.spectral.real_hessian(phi)
    }

    /// Eigen-data at every node; `None` when some node leaves the cone.
    fn state(&self, phi: &[f64], with_coeff: bool) -> Result<Option<NodeState>> {
        let n = self.op.n;
        let m = 2 * n;
        let hess = self.hessian(phi);
        let len = self.grid.len();
        let mut log_f = Vec::with_capacity(len);
        let mut coeff = if with_coeff { vec![vec![0.0; len]; m * (m + 1) / 2] } else { Vec::new() };
        let mut margin = f64::INFINITY;
        let mut trace_sum = 0.0;
        for node in 0..len {
            let h = complex_from_real(n, |a, b| hess.at(node, a, b)) + Hermitian::identity(n, n);
            let (lambda, u) = hermitian_eigen(&h)?;
            if !self.op.in_cone(&lambda) {
                return Ok(None);
            }
            if !with_coeff {
                margin = margin.min(self.op.cone_margin(&lambda));
            }
            let g = self.op.f_gradient(&lambda)?;
            log_f.push(g.value.ln());
            if with_coeff {
                let w: Vec<f64> = g.gradient.iter().map(|d| d / g.value).collect();
                trace_sum += w.iter().sum::<f64>();
                // L = U diag(w) U*
                let l = Hermitian::from_fn(n, n, |j, k| {
                    (0..n).map(|i| u[(j, i)] * w[i] * u[(k, i)].conj()).sum::<Complex64>()
                });
                let mut a = vec![vec![0.0; m]; m];
                for j in 0..n {
                    for k in 0..n {
                        let (lr, li) = (0.25 * l[(j, k)].re, 0.25 * l[(j, k)].im);
                        a[2 * j][2 * k] += lr;
                        a[2 * j + 1][2 * k + 1] += lr;
                        a[2 * j][2 * k + 1] += li;
                        a[2 * j + 1][2 * k] -= li;
                    }
                }
                for p in 0..m {
                    for q in p..m {
                        let c = if p == q { a[p][p] } else { a[p][q] + a[q][p] };
                        coeff[RealHessian::packed_index(m, p, q)][node] = c;
                    }
                }
            }
        }
        Ok(Some(NodeState { log_f, coeff, margin, mean_trace: trace_sum / len as f64 }))
    }

    fn apply_linear(&self, coeff: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        let hess = self.hessian(u);
        let m = self.grid.real_dim();
        let mut out = vec![mean; u.len()];
        for p in 0..m {
            for q in p..m {
                let c = &coeff[RealHessian::packed_index(m, p, q)];
                let d = hess.get(p, q);
                for i in 0..out.len() {
                    out[i] += c[i] * d[i];
                }
            }
        }
        out
    }

    fn precondition(&self, scale: f64, r: &[f64]) -> Vec<f64> {
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let inv = self.spectral.solve_poisson(r);
        inv.into_iter().map(|v| 4.0 * v / scale + mean).collect()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Mass compatibility: returns the factor that makes `k` compatible when a
/// closed-form identity is available.
fn compatibility_factor(op: &OperatorSpec, k: &ScalarField) -> Option<f64> {
    let n = op.n;
    match op.kind {
        OperatorKind::MongeAmpere => {
            let mass = k.values().iter().map(|v| v.powi(n as i32)).sum::<f64>() / k.values().len() as f64;
            Some(mass.powf(-1.0 / n as f64))
        }
        OperatorKind::Hessian { k: order } if order <= 2 => {
            let target = binomial(n, order) as f64;
            let mass = k.values().iter().map(|v| v.powi(order as i32)).sum::<f64>() / k.values().len() as f64;
            Some((target / mass).powf(1.0 / order as f64))
        }
        _ => None,
    }
}

struct NewtonOutcome {
    iterations: usize,
    linear_iterations: usize,
}

fn newton(
    ws: &Workspace,
    log_k: &[f64],
    phi: &mut Vec<f64>,
    theta: &mut f64,
    opts: &SolveOptions,
    k: &[f64],
) -> Result<NewtonOutcome> {
    let residual = |st: &NodeState, th: f64| -> Vec<f64> {
        st.log_f.iter().zip(log_k).map(|(lf, lk)| lf - lk - th).collect()
    };
    let mut state = ws
        .state(phi, true)?
        .ok_or_else(|| Error::ConeExit { node: 0, detail: "initial iterate outside the cone".into() })?;
    let mut res = residual(&state, *theta);
    let mut linear_iterations = 0;
    for it in 0..opts.max_newton {
        let scale = theta.exp();
        let f_res = state
            .log_f
            .iter()
            .zip(k)
            .fold(0.0f64, |m, (lf, kv)| m.max((lf.exp() - scale * kv).abs()));
        if f_res <= opts.tol {
            return Ok(NewtonOutcome { iterations: it, linear_iterations });
        }
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let mut du = vec![0.0; rhs.len()];
        let coeff = std::mem::take(&mut state.coeff);
        let pscale = state.mean_trace / ws.op.n as f64;
        let current = max_abs(&res);
        // Inexact Newton: the linear solve only needs to match the current residual.
        let forcing = opts.linear_tol.max(current.min(1e-2));
        let stats = gmres(
            &mut |u: &[f64]| ws.apply_linear(&coeff, u),
            &mut |r: &[f64]| ws.precondition(pscale, r),
            &rhs,
            &mut du,
            forcing,
            1e-14 * (rhs.len() as f64).sqrt(),
            opts.gmres_restart,
            opts.max_linear,
        )?;
        linear_iterations += stats.iterations;
        let mean = du.iter().sum::<f64>() / du.len() as f64;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = phi.iter().zip(&du).map(|(p, d)| p + step * (d - mean)).collect();
            let th = *theta - step * mean;
            if let Some(st) = ws.state(&trial, true)? {
                let r = residual(&st, th);
                if max_abs(&r) < current {
                    accepted = Some((trial, th, st, r));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, th, st, r)) => {
                *phi = trial;
                *theta = th;
                state = st;
                res = r;
            }
            None => {
                return Err(Error::NoConvergence(format!(
                    "line search failed at Newton iteration {it} with residual {current:.3e}"
                )))
            }
        }
    }
    let scale = theta.exp();
    let f_res = state.log_f.iter().zip(k).fold(0.0f64, |m, (lf, kv)| m.max((lf.exp() - scale * kv).abs()));
    if f_res <= opts.tol {
        return Ok(NewtonOutcome { iterations: opts.max_newton, linear_iterations });
    }
    Err(Error::NoConvergence(format!(
        "Newton reached {} iterations with residual {f_res:.3e}",
        opts.max_newton
    )))
}

/// Solves `f(λ[I + i∂∂̄φ]) = k` and returns `φ` with maximum zero.
pub fn solve_cma(op: &OperatorSpec, k: &ScalarField, opts: &SolveOptions) -> Result<(ScalarField, SolveReport)> {
    solve_cma_from(op, k, None, opts)
}

/// As [`solve_cma`], starting Newton from `initial` when given.
pub fn solve_cma_from(
    op: &OperatorSpec,
    k: &ScalarField,
    initial: Option<&ScalarField>,
    opts: &SolveOptions,
) -> Result<(ScalarField, SolveReport)> {
    let grid = *k.grid();
    let ws = Workspace::new(op, grid)?;
    if let Some(i) = k.values().iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain(format!("density must be positive and finite, node {i} holds {}", k.values()[i])));
    }
    let (k_eff, pre, rescaled) = match compatibility_factor(op, k) {
        Some(c) if (c - 1.0).abs() > 1e-12 => (k.map(|v| v * c), c, true),
        _ => (k.clone(), 1.0, false),
    };

    let mut phi: Vec<f64> = match initial {
        Some(f) => {
            let m = f.mean();
            f.values().iter().map(|v| v - m).collect()
        }
        None => vec![0.0; grid.len()],
    };
    let mut theta = 0.0;
    let mut iterations = 0;
    let mut linear_iterations = 0;
    let mut steps = Vec::new();
    let mut schedule: Vec<f64> = opts.continuation.clone();
    if schedule.last().copied() != Some(1.0) {
        schedule.push(1.0);
    }
    if initial.is_some() {
        schedule = vec![1.0];
    }
    let mut last_t = 0.0;
    let mut refinements = 0;
    let mut queue: std::collections::VecDeque<f64> = schedule.into_iter().collect();
    while let Some(t) = queue.pop_front() {
        let kt: Vec<f64> = k_eff.values().iter().map(|v| (1.0 - t) + t * v).collect();
        let log_k: Vec<f64> = kt.iter().map(|v| v.ln()).collect();
        let mut trial_phi = phi.clone();
        let mut trial_theta = theta;
        match newton(&ws, &log_k, &mut trial_phi, &mut trial_theta, opts, &kt) {
            Ok(out) => {
                phi = trial_phi;
                theta = trial_theta;
                iterations += out.iterations;
                linear_iterations += out.linear_iterations;
                steps.push(t);
                last_t = t;
            }
            Err(e) => {
                if refinements >= opts.max_refinements {
                    return Err(e);
                }
                refinements += 1;
                queue.push_front(t);
                queue.push_front(0.5 * (last_t + t));
            }
        }
    }

    let state = ws
        .state(&phi, false)?
        .ok_or_else(|| Error::ConeExit { node: 0, detail: "final iterate outside the cone".into() })?;
    let scale = theta.exp();
    let final_residual = state
        .log_f
        .iter()
        .zip(k_eff.values())
        .fold(0.0f64, |m, (lf, kv)| m.max((lf.exp() - scale * kv).abs()));
    let top = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    phi.iter_mut().for_each(|v| *v -= top);
    let report = SolveReport {
        iterations,
        final_residual,
        positivity_margin: state.margin,
        continuation_steps: steps,
        linear_iterations,
        rescale_factor: pre * scale,
        rescaled: rescaled || (scale - 1.0).abs() > 1e-12,
    };
    Ok((ScalarField::new(grid, phi)?, report))
}

/// Evaluates `f(λ[I + i∂∂̄φ])` at every node.
pub fn operator_field(op: &OperatorSpec, phi: &ScalarField) -> Result<ScalarField> {
    let ws = Workspace::new(op, *phi.grid())?;
    let hess = ws.hessian(phi.values());
    let n = op.n;
    let mut out = Vec::with_capacity(phi.values().len());
    for node in 0..phi.values().len() {
        let h = complex_from_real(n, |a, b| hess.at(node, a, b)) + Hermitian::identity(n, n);
        let (lambda, _) = hermitian_eigen(&h)?;
        out.push(op.value(&lambda).map_err(|_| Error::ConeExit {
            node,
            detail: format!("eigenvalues {lambda:?}"),
        })?);
    }
    ScalarField::new(*phi.grid(), out)
}

/// Solution of the auxiliary Monge-Ampère problem.
#[derive(Clone, Debug)]
pub struct AuxiliarySolution {
    pub psi: ScalarField,
    /// Normalising constant `mean(w k^n)`.
    pub mass: f64,
    pub report: SolveReport,
}

/// Solves `det(I + i∂∂̄ψ) = (w / A) k^n` with `A = mean(w k^n)`.
pub fn solve_auxiliary(weight: &ScalarField, k: &ScalarField, opts: &SolveOptions) -> Result<AuxiliarySolution> {
    let n = k.grid().complex_dim();
    if let Some(i) = weight.values().iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Domain(format!("auxiliary weight must be positive, node {i} holds {}", weight.values()[i])));
    }
    let rhs = weight.zip_map(k, |w, kv| w * kv.powi(n as i32));
    let mass = rhs.mean();
    let density = rhs.map(|v| (v / mass).powf(1.0 / n as f64));
    let op = OperatorSpec::monge_ampere(n)?;
    let (psi, report) = solve_cma(&op, &density, opts)?;
    Ok(AuxiliarySolution { psi, mass, report })
}
