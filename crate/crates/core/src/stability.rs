//! Stability of the complex Monge-Ampère equation under perturbation of the
//! density: `sup|u - v|` against `‖e^f - e^h‖_{L¹}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::operator::OperatorSpec;
use crate::solver_cma::{solve_cma_from, SolveOptions};

/// `(n + 3 + (p - n)/(p n))^{-1}`.
pub fn beta_reference(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    1.0 / (nf + 3.0 + (p - nf) / (p * nf))
}

/// Shifts `f` so that `mean(e^f) = 1`.
pub fn normalize_log_density(f: &ScalarField) -> ScalarField {
    let top = f.max();
    let mean = f.values().iter().map(|v| (v - top).exp()).sum::<f64>() / f.values().len() as f64;
    let shift = top + mean.ln();
    f.map(|v| v - shift)
}

/// `mean(e^f |f|^p)`.
pub fn log_entropy(f: &ScalarField, p: f64) -> f64 {
    f.values().iter().map(|v| v.exp() * v.abs().powf(p)).sum::<f64>() / f.values().len() as f64
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityInstance {
    pub n: usize,
    pub p: f64,
    pub k_bound: f64,
    pub entropy_f: f64,
    pub entropy_h: f64,
    /// `mean |e^f - e^h|`.
    pub distance: f64,
    /// `sup |u - v|` after the symmetric shift.
    pub gap: f64,
    /// `|max(u - v) - max(v - u)|`.
    pub normalization_residual: f64,
    pub beta_ref: f64,
    #[serde(skip)]
    pub u: Option<ScalarField>,
    #[serde(skip)]
    pub v: Option<ScalarField>,
}

fn check_density(f: &ScalarField, name: &str) -> Result<()> {
    let mean = f.values().iter().map(|v| v.exp()).sum::<f64>() / f.values().len() as f64;
    if !mean.is_finite() || (mean - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("density e^{name} must have mean 1, found {mean}")));
    }
    Ok(())
}

fn solve_density(f: &ScalarField, initial: Option<&ScalarField>, opts: &SolveOptions) -> Result<ScalarField> {
    let n = f.grid().complex_dim();
    let op = OperatorSpec::monge_ampere(n)?;
    let k = f.map(|v| (v / n as f64).exp());
    Ok(solve_cma_from(&op, &k, initial, opts)?.0)
}

fn compare(
    f: &ScalarField,
    h: &ScalarField,
    u: &ScalarField,
    v: &ScalarField,
    p: f64,
    k_bound: f64,
) -> Result<StabilityInstance> {
    let n = f.grid().complex_dim();
    let entropy_f = log_entropy(f, p);
    let entropy_h = log_entropy(h, p);
    if entropy_f > k_bound || entropy_h > k_bound {
        return Err(Error::Premise(format!(
            "entropies {entropy_f:.4} and {entropy_h:.4} must not exceed K = {k_bound}"
        )));
    }
    let diff = u.zip_map(v, |a, b| a - b);
    let (up, down) = (diff.max(), -diff.min());
    let shift = 0.5 * (up - down);
    let v = v.map(|x| x + shift);
    let diff = u.zip_map(&v, |a, b| a - b);
    let normalization_residual = (diff.max() + diff.min()).abs();
    let distance = f
        .values()
        .iter()
        .zip(h.values())
        .map(|(a, b)| (a.exp() - b.exp()).abs())
        .sum::<f64>()
        / f.values().len() as f64;
    Ok(StabilityInstance {
        n,
        p,
        k_bound,
        entropy_f,
        entropy_h,
        distance,
        gap: diff.sup_norm(),
        normalization_residual,
        beta_ref: beta_reference(n, p),
        u: Some(u.clone()),
        v: Some(v),
    })
}

/// Solves `(ω + i∂∂̄u)^n = e^f ω^n` and the same with `h`, and compares.
pub fn run_stability(
    f: &ScalarField,
    h: &ScalarField,
    p: f64,
    k_bound: f64,
    opts: &SolveOptions,
) -> Result<StabilityInstance> {
    if f.grid() != h.grid() {
        return Err(Error::InvalidGrid("densities live on different grids".into()));
    }
    if !(p > f.grid().complex_dim() as f64) {
        return Err(Error::InvalidArgument(format!("entropy exponent p = {p} must exceed n")));
    }
    check_density(f, "f")?;
    check_density(h, "h")?;
    let u = solve_density(f, None, opts)?;
    let v = solve_density(h, Some(&u), opts)?;
    compare(f, h, &u, &v, p, k_bound)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub distance: f64,
    pub gap: f64,
    /// `gap / distance^β`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub n: usize,
    pub p: f64,
    pub beta_ref: f64,
    pub rows: Vec<SweepRow>,
    /// Smallest `C` with `gap <= C distance^β` on every row.
    pub constant: f64,
    /// Least-squares slope of `log gap` against `log distance`.
    pub slope: f64,
    pub monotone: bool,
    pub pass: bool,
}

impl StabilitySweep {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,distance,gap,ratio")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.t, r.distance, r.gap, r.ratio)?;
        }
        Ok(())
    }
}

/// Sweeps `h_t = log((1-t) e^f + t e^{f̃})` over `t = 2^{-j}`, `j = 0..levels`.
pub fn stability_sweep(
    f: &ScalarField,
    f_tilde: &ScalarField,
    p: f64,
    k_bound: f64,
    levels: usize,
    opts: &SolveOptions,
) -> Result<StabilitySweep> {
    if levels < 2 {
        return Err(Error::InvalidArgument("a sweep needs at least two levels".into()));
    }
    let n = f.grid().complex_dim();
    if !(p > n as f64) {
        return Err(Error::InvalidArgument(format!("entropy exponent p = {p} must exceed n")));
    }
    check_density(f, "f")?;
    check_density(f_tilde, "f̃")?;
    let beta = beta_reference(n, p);
    let u = solve_density(f, None, opts)?;
    let mut previous: Option<ScalarField> = None;
    let mut rows = Vec::with_capacity(levels);
    for j in 0..levels {
        let t = 0.5f64.powi(j as i32);
        let h = f.zip_map(f_tilde, |a, b| ((1.0 - t) * a.exp() + t * b.exp()).ln());
        let v = solve_density(&h, Some(previous.as_ref().unwrap_or(&u)), opts)?;
        let inst = compare(f, &h, &u, &v, p, k_bound)?;
        rows.push(SweepRow { t, distance: inst.distance, gap: inst.gap, ratio: inst.gap / inst.distance.powf(beta) });
        previous = Some(v);
    }
    let constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let monotone = rows.windows(2).all(|w| w[1].gap <= w[0].gap);
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.distance.ln(), r.gap.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let holds = rows.iter().all(|r| r.gap <= constant * r.distance.powf(beta) * (1.0 + 1e-12));
    Ok(StabilitySweep {
        n,
        p,
        beta_ref: beta,
        rows,
        constant,
        slope,
        monotone,
        pass: holds && constant.is_finite() && slope >= beta - 0.05,
    })
}
