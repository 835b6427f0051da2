//! Matrix-free Krylov solvers.

use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Restarted GMRES with right preconditioning. Solves `A x = b` starting
/// from `x`, stopping when `|b - A x| <= max(tol |b|, atol)`.
#[allow(clippy::too_many_arguments)]
pub fn gmres(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    precond: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    atol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<KrylovStats> {
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let target = (tol * bnorm).max(atol);
    let mut total = 0;
    loop {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta <= target {
            return Ok(KrylovStats { iterations: total, relative_residual: beta / bnorm });
        }
        if total >= max_iter {
            return Err(Error::NoConvergence(format!(
                "GMRES stalled at relative residual {:.3e} after {total} iterations",
                beta / bnorm
            )));
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut zs: Vec<Vec<f64>> = Vec::new();
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            let z = precond(&basis[k]);
            let mut w = apply(&z);
            zs.push(z);
            for (i, v) in basis.iter().enumerate() {
                h[i][k] = dot(&w, v);
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= h[i][k] * vj;
                }
            }
            // Second Gram-Schmidt pass for stability.
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&w, v);
                h[i][k] += c;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= c * vj;
                }
            }
            h[k + 1][k] = norm(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            let hn = d;
            if g[k + 1].abs() <= target || total >= max_iter || hn == 0.0 {
                break;
            }
            let next_norm = norm(&w);
            if next_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next_norm).collect());
        }
        // Back substitution.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            for (xj, zj) in x.iter_mut().zip(z) {
                *xj += yi * zj;
            }
        }
        if k_used == 0 {
            return Err(Error::NoConvergence("GMRES breakdown".into()));
        }
    }
}

/// Preconditioned conjugate gradients for a symmetric positive
/// semidefinite operator with a consistent right-hand side.
pub fn pcg(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    precond: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<KrylovStats> {
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 0..max_iter {
        let rn = norm(&r);
        if rn <= tol * bnorm {
            return Ok(KrylovStats { iterations: it, relative_residual: rn / bnorm });
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NoConvergence(format!("CG curvature {pap:.3e} is not positive")));
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rn = norm(&r);
    if rn <= tol * bnorm {
        return Ok(KrylovStats { iterations: max_iter, relative_residual: rn / bnorm });
    }
    Err(Error::NoConvergence(format!(
        "CG reached {max_iter} iterations at relative residual {:.3e}",
        rn / bnorm
    )))
}
