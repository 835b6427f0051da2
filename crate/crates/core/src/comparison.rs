//! Comparison functions `Φ = -ε(-ψ + q + Λ)^b - φ + q̃ - s` and their
//! constants, nonpositivity checks, and the conversion of level profiles
//! into `L∞` bounds.

use serde::{Deserialize, Serialize};

use crate::degiorgi::{self, GrowthCertificate, GrowthVariant};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::functionals::{self, SublevelProfile};
use crate::hermitian::{complex_from_real, hermitian_eigen, Hermitian};
use crate::operator::OperatorSpec;
use crate::solver_cma::{self, SolveOptions, SolveReport};
use crate::spectral::Spectral;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonVariant {
    /// `b = n/(n+a)`, `ε = (n b γ^{1/n})^{-n/(a+n)} A^{1/(a+n)}`, `ε b Λ^{b-1} = 1`.
    KahlerLemma3,
    /// The same constants written in the energy-estimate form.
    EnergySection4,
    /// `b = 2n/(2n+1)` with `Λ` driven by the almost-complex constants.
    Symplectic,
}

/// Constants of the almost-complex variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticExtras {
    pub c_j: f64,
    pub c2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConstants {
    pub variant: ComparisonVariant,
    pub a: f64,
    pub n: usize,
    pub gamma: f64,
    pub mass: f64,
    pub b: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub extras: Option<SymplecticExtras>,
}

pub fn choose_constants(
    variant: ComparisonVariant,
    a: f64,
    n: usize,
    gamma: f64,
    mass: f64,
    extras: Option<SymplecticExtras>,
) -> Result<ComparisonConstants> {
    if n == 0 || !(mass > 0.0) || !(gamma > 0.0) || !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "constants need n >= 1 and positive a, γ, A; got n = {n}, a = {a}, γ = {gamma}, A = {mass}"
        )));
    }
    let nf = n as f64;
    let (b, epsilon, lambda) = match variant {
        ComparisonVariant::KahlerLemma3 => {
            let b = nf / (nf + a);
            let eps = (nf * b * gamma.powf(1.0 / nf)).powf(-nf / (a + nf)) * mass.powf(1.0 / (a + nf));
            (b, eps, (eps * b).powf(1.0 / (1.0 - b)))
        }
        ComparisonVariant::EnergySection4 => {
            let b = nf / (nf + a);
            let denom = gamma.powf(1.0 / (nf + a)) * (nf * b).powf(nf / (nf + a));
            let eps = mass.powf(1.0 / (nf + a)) / denom;
            let lam = b.powf(1.0 / (1.0 - b)) / denom.powf(1.0 / (1.0 - b)) * mass.powf(1.0 / a);
            (b, eps, lam)
        }
        ComparisonVariant::Symplectic => {
            let ex = extras.ok_or_else(|| Error::InvalidArgument("symplectic constants need C_J and C_2".into()))?;
            if ex.c_j < 0.0 || ex.c2 < 0.0 {
                return Err(Error::InvalidArgument("C_J and C_2 must be nonnegative".into()));
            }
            let two_n = 2.0 * nf;
            let b = two_n / (two_n + 1.0);
            let lam = two_n / (1.0 + two_n) * (10.0 * ex.c_j * ex.c2).powf(two_n + 1.0) * mass;
            let eps = ((two_n + 1.0) / two_n).powf(two_n / (two_n + 1.0)) * mass.powf(1.0 / (two_n + 1.0));
            (b, eps, lam)
        }
    };
    Ok(ComparisonConstants { variant, a, n, gamma, mass, b, epsilon, lambda, extras })
}

/// `Φ` at every node. `q` and `q̃` default to zero.
pub fn build_phi_values(
    phi: &[f64],
    psi: &[f64],
    q: Option<&[f64]>,
    q_tilde: Option<&[f64]>,
    s: f64,
    consts: &ComparisonConstants,
) -> Result<Vec<f64>> {
    if phi.len() != psi.len() {
        return Err(Error::InvalidArgument("φ and ψ must share a grid".into()));
    }
    let mut out = Vec::with_capacity(phi.len());
    for i in 0..phi.len() {
        let qv = q.map_or(0.0, |q| q[i]);
        let qt = q_tilde.map_or(0.0, |q| q[i]);
        let base = -psi[i] + qv + consts.lambda;
        if !(base > 0.0) {
            return Err(Error::Domain(format!("-ψ + q + Λ = {base:e} is not positive at node {i}")));
        }
        out.push(-consts.epsilon * base.powf(consts.b) - phi[i] + qt - s);
    }
    Ok(out)
}

pub fn build_phi(
    phi: &ScalarField,
    psi: &ScalarField,
    q: Option<&ScalarField>,
    q_tilde: Option<&ScalarField>,
    s: f64,
    consts: &ComparisonConstants,
) -> Result<ScalarField> {
    let values = build_phi_values(
        phi.values(),
        psi.values(),
        q.map(|f| f.values()),
        q_tilde.map(|f| f.values()),
        s,
        consts,
    )?;
    ScalarField::new(*phi.grid(), values)
}

/// Local data at the maximum of `Φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiDiagnostics {
    pub coords: Vec<f64>,
    pub phi: f64,
    pub psi: f64,
    pub psi_gradient: Vec<f64>,
    pub psi_eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiReport {
    pub max_value: f64,
    pub argmax: usize,
    pub slack_scale: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub diagnostics: Option<PhiDiagnostics>,
}

/// Default relative tolerance for `Φ <= 0`.
pub const PHI_TOLERANCE: f64 = 1e-6;

/// `max Φ <= tol · max(|φ|∞, |ψ|∞, 1)`.
pub fn verify_nonpositive(values: &[f64], phi_sup: f64, psi_sup: f64, tol: f64) -> PhiReport {
    let (argmax, max_value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    let slack_scale = phi_sup.max(psi_sup).max(1.0);
    PhiReport { max_value, argmax, slack_scale, tolerance: tol, pass: max_value <= tol * slack_scale, diagnostics: None }
}

/// Fills in gradient and complex-Hessian eigenvalues of `ψ` at the argmax.
pub fn attach_diagnostics(report: &mut PhiReport, phi: &ScalarField, psi: &ScalarField) {
    let grid = *psi.grid();
    let sp = Spectral::new(grid);
    let node = report.argmax;
    let gradient: Vec<f64> = sp.gradient(psi.values()).iter().map(|g| g[node]).collect();
    let hess = sp.real_hessian(psi.values());
    let n = grid.complex_dim();
    let h = complex_from_real(n, |a, b| hess.at(node, a, b)) + Hermitian::identity(n, n);
    let eig = hermitian_eigen(&h).map(|(l, _)| l).unwrap_or_default();
    report.diagnostics = Some(PhiDiagnostics {
        coords: grid.coords(node),
        phi: phi.values()[node],
        psi: psi.values()[node],
        psi_gradient: gradient,
        psi_eigenvalues: eig,
    });
}

/// Result of comparing a solved equation against its auxiliary problem.
#[derive(Clone, Debug, Serialize)]
pub struct KahlerComparison {
    pub constants: ComparisonConstants,
    pub s: f64,
    pub ell: f64,
    pub report: PhiReport,
    pub auxiliary: SolveReport,
    /// Smallest multiple of `ε` that keeps `Φ <= 0` at every node.
    pub critical_epsilon_factor: f64,
    #[serde(skip)]
    pub psi: ScalarField,
}

impl KahlerComparison {
    /// Rechecks `Φ <= 0` with `ε` multiplied by `scale`, reusing `ψ`.
    pub fn with_epsilon_scale(&self, phi: &ScalarField, scale: f64) -> Result<PhiReport> {
        let mut consts = self.constants.clone();
        consts.epsilon *= scale;
        let values = build_phi_values(phi.values(), self.psi.values(), None, None, self.s, &consts)?;
        let mut report = verify_nonpositive(&values, phi.sup_norm(), self.psi.sup_norm(), PHI_TOLERANCE);
        if !report.pass {
            attach_diagnostics(&mut report, phi, &self.psi);
        }
        Ok(report)
    }
}

/// Solves the auxiliary problem with weight `τ_ℓ(-φ - s)^a` for a solution
/// `φ` of `f(λ) = k` and checks `Φ <= 0`.
#[allow(clippy::too_many_arguments)]
pub fn kahler_comparison(
    op: &OperatorSpec,
    phi: &ScalarField,
    s: f64,
    ell: f64,
    a: f64,
    variant: ComparisonVariant,
    opts: &SolveOptions,
) -> Result<KahlerComparison> {
    let k = solver_cma::operator_field(op, phi)?;
    let weight = functionals::auxiliary_weight(phi, None, s, ell, a);
    let aux = solver_cma::solve_auxiliary(&weight, &k, opts)?;
    let constants = choose_constants(variant, a, op.n, op.gamma, aux.mass, None)?;
    let critical = phi
        .values()
        .iter()
        .zip(aux.psi.values())
        .map(|(&p, &ps)| (-p - s) / (constants.epsilon * (-ps + constants.lambda).powf(constants.b)))
        .fold(0.0, f64::max);
    let mut out = KahlerComparison {
        constants,
        s,
        ell,
        report: verify_nonpositive(&[], 0.0, 0.0, PHI_TOLERANCE),
        auxiliary: aux.report,
        critical_epsilon_factor: critical,
        psi: aux.psi,
    };
    out.report = out.with_epsilon_scale(phi, 1.0)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinftyReport {
    pub b0: f64,
    pub delta0: f64,
    pub phi0: f64,
    pub s0: f64,
    pub observed_sup: f64,
    pub pass: bool,
    pub certificate: GrowthCertificate,
}

/// `L∞` bound from a decreasing profile. With `b0 = None` the measured
/// growth constant is used.
pub fn linfty_from_profile(
    profile: &SublevelProfile,
    b0: Option<f64>,
    delta0: f64,
    phi: &ScalarField,
) -> Result<LinftyReport> {
    let probe = degiorgi::verify_growth(&profile.s, &profile.measure, GrowthVariant::Decreasing, 0.0, delta0)?;
    let b0 = b0.unwrap_or(probe.minimal_constant);
    let certificate = degiorgi::verify_growth(&profile.s, &profile.measure, GrowthVariant::Decreasing, b0, delta0)?;
    if !certificate.pass || !b0.is_finite() {
        return Err(Error::Premise(format!(
            "profile needs growth constant {:e}, above the supplied {b0:e}",
            certificate.minimal_constant
        )));
    }
    let phi0 = profile.measure[0];
    let s0 = degiorgi::vanishing_bound(b0, delta0, phi0)?;
    let observed_sup = (-phi.min()).max(0.0);
    Ok(LinftyReport {
        b0,
        delta0,
        phi0,
        s0,
        observed_sup,
        pass: observed_sup <= s0 * (1.0 + 1e-12) + 1e-12,
        certificate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub alphas: Vec<f64>,
    /// Largest `mean(e^{-α ψ})` over the family, per `α`.
    pub family_max: Vec<f64>,
    pub blowup: f64,
    /// Largest `α` whose family maximum stays below `blowup`.
    pub alpha_proxy: Option<f64>,
}

pub fn exponential_integrability(family: &[ScalarField], alphas: &[f64], blowup: f64) -> IntegrabilityReport {
    let family_max: Vec<f64> = alphas
        .iter()
        .map(|&a| family.iter().map(|psi| psi.map(|v| (-a * v).exp()).mean()).fold(0.0, f64::max))
        .collect();
    let alpha_proxy = alphas
        .iter()
        .zip(&family_max)
        .filter(|(_, &v)| v.is_finite() && v <= blowup)
        .map(|(&a, _)| a)
        .reduce(f64::max);
    IntegrabilityReport { alphas: alphas.to_vec(), family_max, blowup, alpha_proxy }
}
