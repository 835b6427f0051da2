use auxma::degiorgi::*;
use auxma::error::Error;
use proptest::prelude::*;

#[test]
fn exponential_profile_minimal_constant() {
    // sup over s + r <= S of r e^{s - r} is e^{S - 1}/2, attained at r = 1/2.
    let top = 4.0;
    let s: Vec<f64> = (0..=4000).map(|i| i as f64 * top / 4000.0).collect();
    let phi: Vec<f64> = s.iter().map(|v| (-v).exp()).collect();
    let cert = verify_growth(&s, &phi, GrowthVariant::Decreasing, 0.0, 1.0).unwrap();
    let exact = 0.5 * (top - 1.0f64).exp();
    assert!(cert.minimal_constant >= exact);
    assert!(cert.minimal_constant <= exact * 1.01);
    let (level, gap) = cert.worst_pair.unwrap();
    assert!((gap - 0.5).abs() < 0.01 && (level - 3.5).abs() < 0.01);
    assert!(!cert.pass);
    assert!(verify_growth(&s, &phi, GrowthVariant::Decreasing, cert.minimal_constant, 1.0).unwrap().pass);
}

#[test]
fn constant_profile_fails_decreasing_check() {
    let s: Vec<f64> = (0..50).map(|i| i as f64).collect();
    let phi = vec![0.5; 50];
    let cert = verify_growth(&s, &phi, GrowthVariant::Decreasing, 1.0, 1.0).unwrap();
    assert!(!cert.pass);
    let wider: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let more = verify_growth(&wider, &vec![0.5; 100], GrowthVariant::Decreasing, 1.0, 1.0).unwrap();
    assert!(more.minimal_constant > cert.minimal_constant);
}

#[test]
fn monotonicity_violations_are_invariant_errors() {
    let s = [0.0, 1.0, 2.0];
    assert!(matches!(verify_growth(&s, &[1.0, 2.0, 0.0], GrowthVariant::Decreasing, 1.0, 1.0), Err(Error::Invariant(_))));
    assert!(matches!(verify_growth(&s, &[1.0, 0.5, 2.0], GrowthVariant::Increasing, 1.0, 1.0), Err(Error::Invariant(_))));
    assert!(verify_growth(&s, &[1.0, 0.5, 0.0], GrowthVariant::Decreasing, 1.0, 0.0).is_err());
}

#[test]
fn vanishing_bound_examples() {
    assert_eq!(vanishing_bound(1.0, 1.0, 1.0).unwrap(), 4.0);
    assert_eq!(vanishing_bound(2.5, 0.3, 0.0).unwrap(), 0.0);
    assert!(matches!(vanishing_bound(1.0, -1.0, 1.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn lower_bound_one_dimensional_shape() {
    let delta = 0.5;
    for (c, s0) in [(1.0, 0.3), (4.0, 2.0), (0.1, 0.05)] {
        let expected = (s0 * (1.0 - 2f64.powf(-0.5)) / (2.0 * c)).powi(2);
        assert!((lower_bound(c, delta, s0).unwrap() - expected).abs() < 1e-15 * expected.max(1.0));
    }
    let seq: Vec<f64> = [1.0, 10.0, 100.0, 1e4].iter().map(|&c| lower_bound(c, 0.5, 1.0).unwrap()).collect();
    assert!(seq.windows(2).all(|w| w[1] < w[0]));
    assert!(lower_bound(0.0, 0.5, 1.0).is_err());
}

#[test]
fn step_value_reads_right_continuous_steps() {
    let s = [0.0, 1.0, 2.0];
    let phi = [3.0, 2.0, 0.0];
    assert_eq!(step_value(&s, &phi, 0.99), 3.0);
    assert_eq!(step_value(&s, &phi, 1.0), 2.0);
    assert_eq!(step_value(&s, &phi, 7.0), 0.0);
}

fn decreasing_profile(steps: &[f64], drops: &[f64], zeros: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0];
    for d in steps {
        s.push(s.last().unwrap() + d);
    }
    let total: f64 = drops.iter().sum();
    let mut value = total;
    let mut phi = Vec::with_capacity(s.len());
    for (i, d) in drops.iter().enumerate() {
        phi.push(if i + zeros >= drops.len() { 0.0 } else { value });
        value -= d;
    }
    phi.truncate(s.len());
    (s, phi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn vanishing_bound_is_sound(
        steps in prop::collection::vec(0.01f64..1.0, 19),
        drops in prop::collection::vec(0.0f64..1.0, 20),
        zeros in 0usize..10,
        delta in 0.1f64..2.0,
    ) {
        let (s, phi) = decreasing_profile(&steps, &drops, zeros);
        let cert = verify_growth(&s, &phi, GrowthVariant::Decreasing, 0.0, delta).unwrap();
        prop_assume!(cert.minimal_constant.is_finite());
        let s0 = vanishing_bound(cert.minimal_constant, delta, phi[0]).unwrap();
        if s0 < *s.last().unwrap() {
            prop_assert_eq!(step_value(&s, &phi, s0), 0.0);
        }
    }

    #[test]
    fn lower_bound_is_sound(
        steps in prop::collection::vec(0.01f64..1.0, 20),
        rises in prop::collection::vec(0.0f64..1.0, 20),
        base in 1e-3f64..1.0,
        delta in 0.1f64..2.0,
    ) {
        let mut s = Vec::new();
        let mut acc = 0.0;
        for d in &steps { acc += d; s.push(acc); }
        let mut phi = Vec::new();
        let mut v = base;
        for r in &rises { v += r; phi.push(v); }
        let cert = verify_growth(&s, &phi, GrowthVariant::Increasing, 0.0, delta).unwrap();
        for (level, value) in s.iter().zip(&phi) {
            let c0 = lower_bound(cert.minimal_constant, delta, *level).unwrap();
            prop_assert!(*value >= c0 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn bounds_are_monotone(b in 0.01f64..10.0, phi0 in 0.0f64..5.0, delta in 0.1f64..2.0, bump in 0.0f64..3.0) {
        let base = vanishing_bound(b, delta, phi0).unwrap();
        prop_assert!(vanishing_bound(b + bump, delta, phi0).unwrap() >= base);
        prop_assert!(vanishing_bound(b, delta, phi0 + bump).unwrap() >= base);
        prop_assert!(lower_bound(b + bump, delta, 1.0).unwrap() <= lower_bound(b, delta, 1.0).unwrap());
    }
}
