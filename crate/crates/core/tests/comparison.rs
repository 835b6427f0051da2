use std::f64::consts::PI;

use auxma::comparison::*;
use auxma::field::ScalarField;
use auxma::functionals::{build_profile, default_levels};
use auxma::grid::TorusGrid;
use auxma::operator::OperatorSpec;
use auxma::solver_cma::{normalize_density, solve_cma, SolveOptions};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn exponent_for_unit_weight() {
    for n in 1..=5 {
        let c = choose_constants(ComparisonVariant::KahlerLemma3, 1.0, n, 0.5, 2.0, None).unwrap();
        assert!((c.b - n as f64 / (n as f64 + 1.0)).abs() < 1e-15);
    }
}

#[test]
fn symplectic_constants_for_one_complex_dimension() {
    for mass in [0.1, 1.0, 7.5] {
        let extras = SymplecticExtras { c_j: 0.3, c2: 2.0 };
        let c = choose_constants(ComparisonVariant::Symplectic, 1.0, 1, 1.0, mass, Some(extras)).unwrap();
        assert!((c.b - 2.0 / 3.0).abs() < 1e-15);
        assert!(rel(c.epsilon, 1.5f64.powf(2.0 / 3.0) * mass.cbrt()) < 1e-14);
        assert!(rel(c.lambda, 2.0 / 3.0 * 6.0f64.powi(3) * mass) < 1e-14);
    }
}

#[test]
fn lemma_constants_match_scalar_evaluation() {
    // n = 2, a = 1, γ = 1/4, A = 1: b = 2/3, n b γ^{1/n} = 2/3, ε = (2/3)^{-2/3}.
    let c = choose_constants(ComparisonVariant::KahlerLemma3, 1.0, 2, 0.25, 1.0, None).unwrap();
    let eps = (3.0f64 / 2.0).powf(2.0 / 3.0);
    assert!(rel(c.epsilon, eps) < 1e-14);
    // ε b Λ^{b-1} = 1 gives Λ = (ε b)^3.
    assert!(rel(c.lambda, (eps * 2.0 / 3.0).powi(3)) < 1e-13);
    let e = choose_constants(ComparisonVariant::EnergySection4, 1.0, 2, 0.25, 1.0, None).unwrap();
    assert!(rel(e.epsilon, c.epsilon) < 1e-13);
    assert!(rel(e.lambda, c.lambda) < 1e-12);
}

#[test]
fn invalid_constants_are_rejected() {
    assert!(choose_constants(ComparisonVariant::KahlerLemma3, 1.0, 2, 0.25, 0.0, None).is_err());
    assert!(choose_constants(ComparisonVariant::KahlerLemma3, 1.0, 2, -1.0, 1.0, None).is_err());
    assert!(choose_constants(ComparisonVariant::KahlerLemma3, 1.0, 0, 1.0, 1.0, None).is_err());
    assert!(choose_constants(ComparisonVariant::Symplectic, 1.0, 1, 1.0, 1.0, None).is_err());
}

#[test]
fn trivial_phi_is_negative_constant() {
    let grid = TorusGrid::new(1, 4).unwrap();
    let c = choose_constants(ComparisonVariant::KahlerLemma3, 1.0, 1, 1.0, 1.0, None).unwrap();
    let zero = ScalarField::zeros(grid);
    let phi = build_phi(&zero, &zero, None, None, 0.0, &c).unwrap();
    let expected = -c.epsilon * c.lambda.powf(c.b);
    assert!(phi.values().iter().all(|v| *v == expected));
    let report = verify_nonpositive(phi.values(), 0.0, 0.0, PHI_TOLERANCE);
    assert!(report.pass);
    assert_eq!(report.max_value, expected);
}

#[test]
fn phi_scalar_spot_check_and_domain_error() {
    let c = choose_constants(ComparisonVariant::KahlerLemma3, 1.0, 1, 1.0, 2.0, None).unwrap();
    let v = build_phi_values(&[-0.7], &[-0.4], Some(&[0.1]), Some(&[0.05]), 0.2, &c).unwrap();
    let hand = -c.epsilon * (0.4 + 0.1 + c.lambda).powf(c.b) + 0.7 + 0.05 - 0.2;
    assert!((v[0] - hand).abs() < 1e-15);
    let err = build_phi_values(&[0.0, 0.0], &[0.0, 10.0 + c.lambda], None, None, 0.0, &c);
    assert!(matches!(err, Err(auxma::error::Error::Domain(m)) if m.contains("node 1")));
}

fn solved_instance() -> ScalarField {
    let grid = TorusGrid::new(2, 12).unwrap();
    let raw = ScalarField::from_fn(grid, |x| 0.3 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[2]).cos());
    let k = normalize_density(&raw).f_omega.map(f64::exp);
    solve_cma(&OperatorSpec::monge_ampere(2).unwrap(), &k, &SolveOptions::default()).unwrap().0
}

#[test]
fn solved_instance_passes_and_halved_epsilon_fails() {
    let phi = solved_instance();
    let op = OperatorSpec::monge_ampere(2).unwrap();
    let cmp = kahler_comparison(&op, &phi, 0.0, 8.0, 1.0, ComparisonVariant::KahlerLemma3, &SolveOptions::default()).unwrap();
    assert!(cmp.report.pass, "{:?}", cmp.report);
    assert!(cmp.critical_epsilon_factor <= 1.0 + PHI_TOLERANCE);
    // Every node satisfies the rearranged inequality.
    let c = &cmp.constants;
    for (p, ps) in phi.values().iter().zip(cmp.psi.values()) {
        let slack = PHI_TOLERANCE * cmp.report.slack_scale;
        assert!(-p - cmp.s <= c.epsilon * (-ps + c.lambda).powf(c.b) + slack);
    }
    let halved = cmp.with_epsilon_scale(&phi, 0.5).unwrap();
    assert_eq!(halved.pass, cmp.critical_epsilon_factor <= 0.5);
    let below = cmp.with_epsilon_scale(&phi, 0.9 * cmp.critical_epsilon_factor).unwrap();
    assert!(!below.pass && below.max_value > 0.0);
    assert!(below.diagnostics.is_some());
}

#[test]
fn linfty_examples() {
    let grid = TorusGrid::new(1, 8).unwrap();
    let zero = ScalarField::zeros(grid);
    let prof = build_profile(&zero, None, &[0.0, 0.5, 1.0]).unwrap();
    let r = linfty_from_profile(&prof, Some(1.0), 0.5, &zero).unwrap();
    assert_eq!(r.s0, 0.0);
    assert!(r.pass);

    // Synthetic φ(s) = max(1 - s, 0) sampled densely.
    let s: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
    let measure: Vec<f64> = s.iter().map(|v| (1.0 - v).max(0.0)).collect();
    let profile = auxma::functionals::SublevelProfile {
        excess: measure.clone(),
        s: s.clone(),
        measure,
        measure_kind: auxma::functionals::MeasureKind::Uniform,
    };
    for delta in [0.25, 0.5, 1.0] {
        let r = linfty_from_profile(&profile, None, delta, &zero).unwrap();
        assert!(r.s0 >= 1.0, "{delta}: {}", r.s0);
    }
    assert!(matches!(
        linfty_from_profile(&profile, Some(1e-3), 0.5, &zero),
        Err(auxma::error::Error::Premise(_))
    ));
}

#[test]
fn linfty_bounds_solved_instance() {
    let phi = solved_instance();
    let prof = build_profile(&phi, None, &default_levels(&phi, 64)).unwrap();
    let r = linfty_from_profile(&prof, None, 0.5, &phi).unwrap();
    assert!(r.pass && r.s0 >= r.observed_sup);
}

#[test]
fn integrability_examples() {
    let grid = TorusGrid::new(1, 16).unwrap();
    let alphas = [0.5, 1.0, 2.0, 4.0];
    let flat = exponential_integrability(&[ScalarField::zeros(grid)], &alphas, 1e6);
    assert!(flat.family_max.iter().all(|v| (v - 1.0).abs() < 1e-15));
    assert_eq!(flat.alpha_proxy, Some(4.0));

    let pole = ScalarField::from_fn(grid, |x| {
        let d2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
        0.5 * (d2 + 1e-4).ln() - 0.5 * (0.5f64 + 1e-4).ln()
    });
    let pole = pole.map(|v| v - pole.max());
    let rep = exponential_integrability(&[pole], &alphas, 50.0);
    assert!(rep.family_max.windows(2).all(|w| w[1] > w[0]));
    assert!(rep.alpha_proxy.unwrap() < 4.0);
}

proptest! {
    #[test]
    fn lemma_constant_identity(a in 0.2f64..4.0, n in 1usize..5, gamma in 0.05f64..2.0, mass in 0.01f64..100.0) {
        let c = choose_constants(ComparisonVariant::KahlerLemma3, a, n, gamma, mass, None).unwrap();
        prop_assert!((c.epsilon * c.b * c.lambda.powf(c.b - 1.0) - 1.0).abs() < 1e-12);
        let d = choose_constants(ComparisonVariant::KahlerLemma3, a, n, gamma, 2.0 * mass, None).unwrap();
        prop_assert!(rel(d.epsilon / c.epsilon, 2f64.powf(1.0 / (a + n as f64))) < 1e-12);
    }

    #[test]
    fn nonpositive_phi_rearranges(phi in prop::collection::vec(-3.0f64..0.0, 16), psi in prop::collection::vec(-3.0f64..0.0, 16), s in 0.0f64..1.0) {
        let c = choose_constants(ComparisonVariant::KahlerLemma3, 1.0, 1, 1.0, 1.0, None).unwrap();
        let values = build_phi_values(&phi, &psi, None, None, s, &c).unwrap();
        let report = verify_nonpositive(&values, 3.0, 3.0, 0.0);
        if report.pass {
            for i in 0..16 {
                prop_assert!(-phi[i] - s <= c.epsilon * (-psi[i] + c.lambda).powf(c.b) + 1e-12);
            }
        }
    }
}
