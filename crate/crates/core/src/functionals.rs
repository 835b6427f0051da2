//! Sublevel profiles, entropy and energy functionals, and the smoothed
//! positive part used to weight the auxiliary problem.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Smooth upper approximation of `max(t, 0)`:
/// `(t + sqrt(t^2 + 1/ℓ^2)) / 2`.
pub fn tau(ell: f64, t: f64) -> f64 {
    let e2 = 1.0 / (ell * ell);
    let root = (t * t + e2).sqrt();
    if t >= 0.0 {
        0.5 * (t + root)
    } else {
        // Same value, written without cancellation.
        0.5 * e2 / (root - t)
    }
}

/// Auxiliary weight `τ_ℓ(-φ + q - s)^a` at every node.
pub fn auxiliary_weight(phi: &ScalarField, q: Option<&ScalarField>, s: f64, ell: f64, a: f64) -> ScalarField {
    match q {
        Some(q) => phi.zip_map(q, |p, qv| tau(ell, -p + qv - s).powf(a)),
        None => phi.map(|p| tau(ell, -p - s).powf(a)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Background volume.
    Uniform,
    /// Background volume weighted by `k^n`.
    Density,
}

/// Measure and excess mass of the sublevel sets `{φ < -s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelProfile {
    pub s: Vec<f64>,
    /// Measure of `{φ < -s}` against the weight, per unit background volume.
    pub measure: Vec<f64>,
    /// Weighted integral of `(-φ - s)` over `{φ < -s}`.
    pub excess: Vec<f64>,
    pub measure_kind: MeasureKind,
}

/// `count` equally spaced levels on `[0, max(-φ)]`.
pub fn default_levels(phi: &ScalarField, count: usize) -> Vec<f64> {
    let top = (-phi.min()).max(0.0);
    let count = count.max(2);
    (0..count).map(|i| top * i as f64 / (count - 1) as f64).collect()
}

pub fn build_profile(phi: &ScalarField, density: Option<&ScalarField>, levels: &[f64]) -> Result<SublevelProfile> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("levels must be strictly increasing".into()));
    }
    let weights: Vec<f64> = match density {
        Some(d) => {
            let n = phi.grid().complex_dim() as i32;
            d.values().iter().map(|k| k.powi(n)).collect()
        }
        None => vec![1.0; phi.values().len()],
    };
    let total = phi.values().len() as f64;
    let mut measure = Vec::with_capacity(levels.len());
    let mut excess = Vec::with_capacity(levels.len());
    for &s in levels {
        let (mut mu, mut ex) = (0.0, 0.0);
        for (&p, &w) in phi.values().iter().zip(&weights) {
            if p < -s {
                mu += w;
                ex += (-p - s) * w;
            }
        }
        measure.push(mu / total);
        excess.push(ex / total);
    }
    Ok(SublevelProfile {
        s: levels.to_vec(),
        measure,
        excess,
        measure_kind: if density.is_some() { MeasureKind::Density } else { MeasureKind::Uniform },
    })
}

impl SublevelProfile {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,phi,A")?;
        for i in 0..self.s.len() {
            writeln!(w, "{:?},{:?},{:?}", self.s[i], self.measure[i], self.excess[i])?;
        }
        Ok(())
    }

    /// Largest violation of `A_s >= r φ(s + r)` over level pairs; a value
    /// `<= 0` means the inequality holds everywhere on the grid.
    pub fn excess_bound_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.s.len() {
            for j in i..self.s.len() {
                let r = self.s[j] - self.s[i];
                worst = worst.max(r * self.measure[j] - self.excess[i]);
            }
        }
        worst
    }

    /// `max A_s / φ(s)^{1 + δ0}` over levels with positive measure.
    pub fn growth_constant(&self, delta0: f64) -> f64 {
        self.s
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.measure[i] > 0.0)
            .map(|(i, _)| self.excess[i] / self.measure[i].powf(1.0 + delta0))
            .fold(0.0, f64::max)
    }
}

/// Entropies of `e^{nF}` and the energy `mean((-φ) e^{nF})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub p: f64,
    /// `mean(e^{nF} |nF|^p)`.
    pub ent_p: f64,
    /// `mean(e^{nF} |F|^p)`.
    pub nash_p: f64,
    /// `mean(e^{nF} log(1 + e^{nF})^p)`.
    pub ent_p_orlicz: f64,
    pub energy: f64,
}

pub fn entropy_report(phi: &ScalarField, f_omega: &ScalarField, p: f64) -> EntropyReport {
    let n = f_omega.grid().complex_dim() as f64;
    let len = f_omega.values().len() as f64;
    let (mut ent, mut nash, mut orl, mut energy) = (0.0, 0.0, 0.0, 0.0);
    for (&f, &ph) in f_omega.values().iter().zip(phi.values()) {
        let e = (n * f).exp();
        ent += e * (n * f).abs().powf(p);
        nash += e * f.abs().powf(p);
        orl += e * e.ln_1p().powf(p);
        energy += -ph * e;
    }
    EntropyReport { p, ent_p: ent / len, nash_p: nash / len, ent_p_orlicz: orl / len, energy: energy / len }
}

/// Exponent `n / (n - p)` for `p < n`.
pub fn trudinger_exponent(n: usize, p: f64) -> Option<f64> {
    (p < n as f64 && p >= 0.0).then(|| n as f64 / (n as f64 - p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrudingerReport {
    pub alpha: f64,
    pub q: f64,
    /// `mean(exp(α (-φ)^q))`.
    pub exponential_integral: f64,
    /// `mean((-φ)^{pq} e^{nF})`.
    pub energy_moment: f64,
}

pub fn trudinger_energy_check(phi: &ScalarField, f_omega: &ScalarField, p: f64, q: f64, alpha: f64) -> TrudingerReport {
    let n = f_omega.grid().complex_dim() as f64;
    let len = phi.values().len() as f64;
    let mut ei = 0.0;
    let mut mom = 0.0;
    for (&ph, &f) in phi.values().iter().zip(f_omega.values()) {
        let v = (-ph).max(0.0);
        ei += (alpha * v.powf(q)).exp();
        mom += v.powf(p * q) * (n * f).exp();
    }
    TrudingerReport { alpha, q, exponential_integral: ei / len, energy_moment: mom / len }
}

/// Pointwise splitting of `e^{nF} v^p` into an entropy part and an
/// exponential part, with the constant `c_p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoungSplit {
    pub p: f64,
    pub c_p: f64,
    /// `e^{nF} v^p`.
    pub lhs: Vec<f64>,
    /// `e^{nF} log(1 + e^{nF})^p + v^p (e^v - 1)`.
    pub young_rhs: Vec<f64>,
    /// `c_p (e^{nF}(1 + |nF|^p) + e^{2v})`.
    pub split_rhs: Vec<f64>,
    pub young_holds: bool,
    pub split_holds: bool,
}

/// Constant in `e^{nF} v^p <= c_p (e^{nF}(1 + |nF|^p) + e^{2v})`.
pub fn young_constant(p: f64) -> f64 {
    let entropy_part = 1f64.max(2f64.powf(p - 1.0));
    let exp_part = (p / std::f64::consts::E).powf(p);
    entropy_part.max(exp_part)
}

pub fn young_split(v: &ScalarField, f_omega: &ScalarField, p: f64) -> Result<YoungSplit> {
    if p < 1.0 {
        return Err(Error::InvalidArgument(format!("young split needs p >= 1, got {p}")));
    }
    if let Some(i) = v.values().iter().position(|&x| x < 0.0) {
        return Err(Error::Domain(format!("v must be nonnegative, node {i} holds {}", v.values()[i])));
    }
    let n = f_omega.grid().complex_dim() as f64;
    let c_p = young_constant(p);
    let mut lhs = Vec::new();
    let mut young_rhs = Vec::new();
    let mut split_rhs = Vec::new();
    for (&x, &f) in v.values().iter().zip(f_omega.values()) {
        let u = (n * f).exp();
        let vp = x.powf(p);
        lhs.push(u * vp);
        young_rhs.push(u * u.ln_1p().powf(p) + vp * x.exp_m1());
        split_rhs.push(c_p * (u * (1.0 + (n * f).abs().powf(p)) + (2.0 * x).exp()));
    }
    let slack = |a: f64, b: f64| a <= b * (1.0 + 1e-12);
    let young_holds = lhs.iter().zip(&young_rhs).all(|(a, b)| slack(*a, *b));
    let split_holds = lhs.iter().zip(&split_rhs).all(|(a, b)| slack(*a, *b));
    Ok(YoungSplit { p, c_p, lhs, young_rhs, split_rhs, young_holds, split_holds })
}
