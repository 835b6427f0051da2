//! Concave, one-homogeneous eigenvalue operators and their cones.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    /// `(prod λ)^{1/n}` on the positive cone.
    MongeAmpere,
    /// `σ_k^{1/k}` on the Gårding cone `Γ_k`.
    Hessian { k: usize },
    /// Geometric mean of all `p`-fold eigenvalue sums.
    PMongeAmpere { p: usize },
}

/// An operator `f` with its complex dimension and the lower bound `γ` on
/// the product of its partial derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub n: usize,
    pub gamma: f64,
}

/// Value, gradient and `prod ∂f - γ` at an eigenvalue vector.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub margin: f64,
}

const GAMMA_SAMPLES: usize = 20_000;
const GAMMA_SEED: u64 = 0x5eed_9a11;
/// Fraction of the sampled minimum stored as `γ` for sampled operators.
pub const GAMMA_SAFETY: f64 = 0.9;

/// Elementary symmetric polynomial `σ_k`, with `σ_0 = 1`.
pub fn elementary_symmetric(lambda: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &l in lambda {
        for j in (1..=k.min(lambda.len())).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e[k]
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, p, &mut Vec::new(), &mut out);
    out
}

impl OperatorSpec {
    pub fn monge_ampere(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self { kind: OperatorKind::MongeAmpere, n, gamma: (n as f64).powi(-(n as i32)) })
    }

    /// `σ_k^{1/k}` with `γ` measured over a deterministic cone sample.
    pub fn hessian(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
        }
        let mut spec = Self { kind: OperatorKind::Hessian { k }, n, gamma: 0.0 };
        spec.gamma = GAMMA_SAFETY * spec.sampled_gradient_product_min(GAMMA_SAMPLES, GAMMA_SEED);
        Ok(spec)
    }

    /// Geometric mean of the `p`-sums with `γ` measured over a cone sample.
    pub fn p_monge_ampere(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::InvalidArgument(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
        }
        let mut spec = Self { kind: OperatorKind::PMongeAmpere { p }, n, gamma: 0.0 };
        spec.gamma = GAMMA_SAFETY * spec.sampled_gradient_product_min(GAMMA_SAMPLES, GAMMA_SEED);
        Ok(spec)
    }

    pub fn from_kind(kind: OperatorKind, n: usize) -> Result<Self> {
        match kind {
            OperatorKind::MongeAmpere => Self::monge_ampere(n),
            OperatorKind::Hessian { k } => Self::hessian(n, k),
            OperatorKind::PMongeAmpere { p } => Self::p_monge_ampere(n, p),
        }
    }

    /// Membership in the open cone.
    pub fn in_cone(&self, lambda: &[f64]) -> bool {
        match self.kind {
            OperatorKind::MongeAmpere => lambda.iter().all(|&l| l > 0.0),
            OperatorKind::Hessian { k } => (1..=k).all(|j| elementary_symmetric(lambda, j) > 0.0),
            OperatorKind::PMongeAmpere { p } => subsets(lambda.len(), p)
                .iter()
                .all(|s| s.iter().map(|&i| lambda[i]).sum::<f64>() > 0.0),
        }
    }

    /// Largest `t` with `λ - t·(1,...,1)` still in the closed cone.
    pub fn cone_margin(&self, lambda: &[f64]) -> f64 {
        match self.kind {
            OperatorKind::MongeAmpere => lambda.iter().copied().fold(f64::INFINITY, f64::min),
            OperatorKind::PMongeAmpere { p } => {
                let mut sorted = lambda.to_vec();
                sorted.sort_by(f64::total_cmp);
                sorted[..p].iter().sum::<f64>() / p as f64
            }
            OperatorKind::Hessian { .. } => {
                let shifted = |t: f64| lambda.iter().map(|l| l - t).collect::<Vec<_>>();
                let spread = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs())) + 1.0;
                let (mut lo, mut hi) = if self.in_cone(lambda) {
                    (0.0, lambda.iter().sum::<f64>() / lambda.len() as f64)
                } else {
                    (-spread, 0.0)
                };
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.in_cone(&shifted(mid)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            }
        }
    }

    /// `f(λ)`, or a domain error outside the cone.
    pub fn value(&self, lambda: &[f64]) -> Result<f64> {
        self.check(lambda)?;
        Ok(self.value_unchecked(lambda))
    }

    fn check(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "expected {} eigenvalues, got {}",
                self.n,
                lambda.len()
            )));
        }
        if !self.in_cone(lambda) {
            return Err(Error::Domain(format!("{lambda:?} lies outside the cone")));
        }
        Ok(())
    }

    fn value_unchecked(&self, lambda: &[f64]) -> f64 {
        match self.kind {
            OperatorKind::MongeAmpere => {
                let log: f64 = lambda.iter().map(|l| l.ln()).sum();
                (log / self.n as f64).exp()
            }
            OperatorKind::Hessian { k } => elementary_symmetric(lambda, k).powf(1.0 / k as f64),
            OperatorKind::PMongeAmpere { p } => {
                let subs = subsets(self.n, p);
                let log: f64 = subs.iter().map(|s| s.iter().map(|&i| lambda[i]).sum::<f64>().ln()).sum();
                (log / subs.len() as f64).exp()
            }
        }
    }

    /// Gradient of `f` and the margin `prod ∂f - γ`.
    pub fn f_gradient(&self, lambda: &[f64]) -> Result<GradientEval> {
        self.check(lambda)?;
        let value = self.value_unchecked(lambda);
        let n = self.n;
        let gradient: Vec<f64> = match self.kind {
            OperatorKind::MongeAmpere => lambda.iter().map(|l| value / (n as f64 * l)).collect(),
            OperatorKind::Hessian { k } => {
                let sk = elementary_symmetric(lambda, k);
                let pre = sk.powf(1.0 / k as f64 - 1.0) / k as f64;
                (0..n)
                    .map(|j| {
                        let rest: Vec<f64> =
                            lambda.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &l)| l).collect();
                        pre * elementary_symmetric(&rest, k - 1)
                    })
                    .collect()
            }
            OperatorKind::PMongeAmpere { p } => {
                let subs = subsets(n, p);
                let c = subs.len() as f64;
                let mut g = vec![0.0; n];
                for s in &subs {
                    let sum: f64 = s.iter().map(|&i| lambda[i]).sum();
                    for &i in s {
                        g[i] += value / (c * sum);
                    }
                }
                g
            }
        };
        let margin = gradient.iter().product::<f64>() - self.gamma;
        Ok(GradientEval { value, gradient, margin })
    }

    /// Minimum of `prod ∂f` over a deterministic sample of cone directions,
    /// including the diagonal direction.
    pub fn sampled_gradient_product_min(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = self
            .f_gradient(&vec![1.0; self.n])
            .map(|g| g.gradient.iter().product::<f64>())
            .unwrap_or(f64::INFINITY);
        let mut taken = 0;
        let mut tries = 0;
        while taken < samples && tries < 50 * samples {
            tries += 1;
            let lambda: Vec<f64> = (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if let Ok(g) = self.f_gradient(&lambda) {
                best = best.min(g.gradient.iter().product());
                taken += 1;
            }
        }
        best
    }
}
