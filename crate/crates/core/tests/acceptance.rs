//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use auxma::comparison::{
    choose_constants, kahler_comparison, linfty_from_profile, ComparisonVariant, SymplecticExtras, PHI_TOLERANCE,
};
use auxma::degiorgi::{lower_bound, step_value, vanishing_bound, verify_growth, GrowthVariant};
use auxma::functionals::{build_profile, default_levels};
use auxma::green::{diameter_bound, GreenSolver, MetricField};
use auxma::solver_cma::{normalize_density, solve_cma, SolveOptions};
use auxma::solver_rma::{abp_check, interior_gradient_check, solve_rma, BallMesh, RmaOptions};
use auxma::spectral::Spectral;
use auxma::stability::{normalize_log_density, stability_sweep};
use auxma::symplectic::{christoffel_contraction, run_mainnew, validate, MainnewOptions};
use auxma::{OperatorSpec, ScalarField, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn constant_formulas() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=3usize {
        let nf = n as f64;
        for a in [1.0, 2.0, 5.0] {
            for (gamma, mass) in [(nf.powf(-nf), 1.0), (0.3, 0.05), (1.0, 17.0)] {
                let c = choose_constants(ComparisonVariant::KahlerLemma3, a, n, gamma, mass, None).unwrap();
                let e = choose_constants(ComparisonVariant::EnergySection4, a, n, gamma, mass, None).unwrap();
                let b = nf / (nf + a);
                let eps = (nf * b * gamma.powf(1.0 / nf)).powf(-nf / (a + nf)) * mass.powf(1.0 / (a + nf));
                worst = worst
                    .max((c.b - b).abs())
                    .max(rel(c.epsilon, eps))
                    .max((c.epsilon * c.b * c.lambda.powf(c.b - 1.0) - 1.0).abs())
                    .max(rel(e.epsilon, eps))
                    .max((e.epsilon * e.b * e.lambda.powf(e.b - 1.0) - 1.0).abs());
            }
        }
        for (c_j, c2, mass) in [(0.2, 3.0, 1.0), (1.5, 0.7, 0.25)] {
            let extras = SymplecticExtras { c_j, c2 };
            let s = choose_constants(ComparisonVariant::Symplectic, 1.0, n, 1.0, mass, Some(extras)).unwrap();
            let two_n = 2.0 * nf;
            let lambda = two_n / (1.0 + two_n) * (10.0 * c_j * c2).powf(two_n + 1.0) * mass;
            let eps = ((two_n + 1.0) / two_n).powf(two_n / (two_n + 1.0)) * mass.powf(1.0 / (two_n + 1.0));
            worst = worst.max((s.b - two_n / (two_n + 1.0)).abs()).max(rel(s.lambda, lambda)).max(rel(s.epsilon, eps));
        }
    }
    outcome(worst <= 1e-12, format!("max deviation {worst:.2e} (tol 1e-12)"))
}

fn poisson_reduction() -> Outcome {
    let grid = TorusGrid::new(1, 128).unwrap();
    let raw = ScalarField::from_fn(grid, |x| {
        0.5 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin() + 0.2 * (4.0 * PI * (x[0] + x[1])).sin()
    });
    let k = normalize_density(&raw).f_omega.map(f64::exp);
    let (phi, report) = solve_cma(&OperatorSpec::monge_ampere(1).unwrap(), &k, &SolveOptions::default()).unwrap();
    let rhs: Vec<f64> = k.values().iter().map(|v| 4.0 * (v - 1.0)).collect();
    let mut oracle = ScalarField::new(grid, Spectral::new(grid).solve_poisson(&rhs)).unwrap();
    oracle.normalize_max_zero();
    let err = phi.values().iter().zip(oracle.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(err <= 1e-10 && report.final_residual <= 1e-10, format!("max-norm error {err:.2e} at N = 128 (tol 1e-10)"))
}

/// Truncation parameter of the auxiliary weight, near the `ℓ → ∞` limit.
const AUXILIARY_ELL: f64 = 32.0;

struct Instance {
    label: String,
    op: OperatorSpec,
    phi: ScalarField,
}

fn comparison_instances() -> Vec<Instance> {
    let grid = TorusGrid::new(2, 16).unwrap();
    let recipes: [fn(&[f64]) -> f64; 3] = [
        |x| 0.8 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[2]).cos(),
        |x| 0.6 * (2.0 * PI * (x[0] + x[3])).sin() + 0.3 * (2.0 * PI * x[1]).cos(),
        |x| (2.0 * PI * x[1]).sin() * (2.0 * PI * x[2]).sin() * (2.0 * PI * x[3]).cos(),
    ];
    let ops = [("MA", OperatorSpec::monge_ampere(2).unwrap()), ("σ2", OperatorSpec::hessian(2, 2).unwrap())];
    let mut out = Vec::new();
    for (name, op) in &ops {
        for (i, f) in recipes.iter().enumerate() {
            let k = normalize_density(&ScalarField::from_fn(grid, f)).f_omega.map(f64::exp);
            let (phi, _) = solve_cma(op, &k, &SolveOptions::default()).unwrap();
            out.push(Instance { label: format!("{name}/{}", i + 1), op: op.clone(), phi });
        }
    }
    out
}

fn comparison_inequality(instances: &[Instance]) -> Outcome {
    let mut pass = instances.len() >= 5;
    let mut notes = Vec::new();
    for inst in instances {
        let cmp = kahler_comparison(
            &inst.op,
            &inst.phi,
            0.0,
            AUXILIARY_ELL,
            1.0,
            ComparisonVariant::KahlerLemma3,
            &SolveOptions::default(),
        )
        .unwrap();
        let halved = cmp.with_epsilon_scale(&inst.phi, 0.5).unwrap();
        let ok = cmp.report.pass && cmp.report.tolerance == PHI_TOLERANCE && !halved.pass;
        pass &= ok;
        notes.push(format!(
            "{} maxΦ/scale {:.1e}, critical ε factor {:.2}, halved {:+.1e}",
            inst.label,
            cmp.report.max_value / cmp.report.slack_scale,
            cmp.critical_epsilon_factor,
            halved.max_value
        ));
    }
    outcome(pass, format!("{} instances; {}", instances.len(), notes.join("; ")))
}

fn degiorgi_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut dec_checked, mut dec_bad, mut inc_bad) = (0, 0, 0);
    for _ in 0..1000 {
        let len = 24;
        let delta = rng.gen_range(0.1..2.0);
        let mut s = vec![0.0];
        for _ in 1..len {
            s.push(s.last().unwrap() + rng.gen_range(0.01..1.0));
        }
        let zeros = rng.gen_range(0..len / 2);
        let mut v: f64 = (0..len).map(|_| rng.gen_range(0.0..1.0)).sum();
        let mut phi = Vec::new();
        for i in 0..len {
            phi.push(if i + zeros >= len { 0.0 } else { v });
            v = (v - rng.gen_range(0.0..1.0)).max(0.0);
        }
        let cert = verify_growth(&s, &phi, GrowthVariant::Decreasing, 0.0, delta).unwrap();
        let passing = verify_growth(&s, &phi, GrowthVariant::Decreasing, cert.minimal_constant, delta).unwrap();
        let s0 = vanishing_bound(cert.minimal_constant, delta, phi[0]).unwrap();
        if passing.pass && s0 < *s.last().unwrap() {
            dec_checked += 1;
            dec_bad += (step_value(&s, &phi, s0) != 0.0) as usize;
        }

        let mut levels = Vec::new();
        let mut acc = 0.0;
        for _ in 0..len {
            acc += rng.gen_range(0.01..1.0);
            levels.push(acc);
        }
        let mut value = rng.gen_range(1e-3..1.0);
        let rising: Vec<f64> = (0..len)
            .map(|_| {
                value += rng.gen_range(0.0..1.0);
                value
            })
            .collect();
        let cert = verify_growth(&levels, &rising, GrowthVariant::Increasing, 0.0, delta).unwrap();
        for (level, value) in levels.iter().zip(&rising) {
            let c0 = lower_bound(cert.minimal_constant, delta, *level).unwrap();
            inc_bad += (*value < c0 * (1.0 - 1e-12)) as usize;
        }
    }
    outcome(
        dec_bad == 0 && inc_bad == 0 && dec_checked > 0,
        format!("1000 + 1000 profiles; decreasing violations {dec_bad} ({dec_checked} with S₀ in window), increasing violations {inc_bad}"),
    )
}

fn linfty_chain(instances: &[Instance]) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for inst in instances {
        let n = inst.op.n as f64;
        let p = 2.0 * n;
        let profile = build_profile(&inst.phi, None, &default_levels(&inst.phi, 64)).unwrap();
        let r = linfty_from_profile(&profile, None, (p - n) / (n * p), &inst.phi).unwrap();
        pass &= r.pass && r.s0 >= r.observed_sup;
        notes.push(format!("{} S₀ {:.2e} ≥ {:.2e}", inst.label, r.s0, r.observed_sup));
    }
    outcome(pass, notes.join("; "))
}

fn second(x: &[f64]) -> f64 {
    x.get(1).copied().unwrap_or(0.0)
}

fn real_monge_ampere() -> Outcome {
    let opts = RmaOptions::default();
    let (c, r0) = (2.5, 0.3);
    let mesh = BallMesh::interval(2.0 * r0, 40).unwrap();
    let sol = solve_rma(&mesh, &mesh.sample(|_| c), &opts).unwrap();
    let err1 = mesh
        .points()
        .iter()
        .zip(&sol.psi.values)
        .map(|(p, v)| (v - c * (p[0] * p[0] - 4.0 * r0 * r0) / 2.0).abs())
        .fold(0.0, f64::max);

    let radius = 0.4;
    let rho_r = |r: f64| (3.0 * r * r).exp() * (1.0 + r * r);
    let mesh = BallMesh::disk(radius, 31, 16).unwrap();
    let sol = solve_rma(&mesh, &mesh.sample(|x| rho_r(x[0].hypot(x[1]))), &opts).unwrap();
    let err2 = mesh
        .points()
        .iter()
        .zip(&sol.psi.values)
        .step_by(5)
        .map(|(p, v)| (v - radial_oracle(rho_r, radius, p[0].hypot(p[1]))).abs())
        .fold(0.0, f64::max);

    let densities: [fn(&[f64]) -> f64; 3] = [
        |_| 1.0,
        |x| 1.0 + 0.6 * (4.0 * x[0]).sin() * (3.0 * second(x)).cos() + 0.3 * x[0],
        |x| (2.0 * x[0] - second(x)).exp(),
    ];
    let mut bounds = 0;
    for f in densities {
        for mesh in [BallMesh::interval(0.4, 40).unwrap(), BallMesh::disk(0.4, 21, 24).unwrap()] {
            let raw = mesh.sample(f);
            let mass = mesh.integrate(&raw);
            let rho: Vec<f64> = raw.iter().map(|v| v / mass).collect();
            let sol = solve_rma(&mesh, &rho, &opts).unwrap();
            bounds += (abp_check(&sol).pass && interior_gradient_check(&sol).pass) as usize;
        }
    }
    outcome(
        err1 <= 1e-10 && err2 <= 1e-8 && bounds == 6,
        format!("m=1 error {err1:.1e} (tol 1e-10), m=2 radial error {err2:.1e} (tol 1e-8), ABP+gradient {bounds}/6 unit-mass instances"),
    )
}

fn green_functions() -> Outcome {
    let n = 256;
    let grid = TorusGrid::new(1, n).unwrap();
    let slice = GreenSolver::new(&MetricField::flat(grid)).unwrap().slice(grid.linear_index(&[3, 129])).unwrap();
    let oracle = flat_oracle(n, (3, 129));
    let flat_err = slice.values.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let grid = TorusGrid::new(1, 32).unwrap();
    let bump = ScalarField::from_fn(grid, |x| {
        0.8 * ((2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos() + 0.5 * (2.0 * PI * (x[0] + x[1])).cos())
            / (4.0 * PI * PI)
    });
    let metrics = [
        MetricField::flat(grid),
        MetricField::conformal(&ScalarField::from_fn(grid, |x| 0.6 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin()))
            .unwrap(),
        MetricField::from_potential(&bump).unwrap(),
    ];
    let (x, y) = (grid.linear_index(&[2, 5]), grid.linear_index(&[20, 11]));
    let mut sym: f64 = 0.0;
    let mut mean: f64 = 0.0;
    for m in &metrics[1..] {
        let solver = GreenSolver::new(m).unwrap();
        let (gx, gy) = (solver.slice(x).unwrap(), solver.slice(y).unwrap());
        sym = sym.max((gx.values[y] - gy.values[x]).abs());
        let w = m.weights();
        for s in [&gx, &gy] {
            mean = mean.max(s.values.iter().zip(&w).map(|(g, w)| g * w).sum::<f64>().abs());
        }
    }
    let diam = metrics.iter().filter(|m| diameter_bound(m).unwrap().pass).count();
    outcome(
        flat_err <= 1e-10 && sym <= 1e-10 && mean <= 1e-10 && diam == 3,
        format!("flat N=256 error {flat_err:.1e}, symmetry {sym:.1e}, mean {mean:.1e} (tol 1e-10), diameter bound {diam}/3"),
    )
}

fn christoffel_order() -> Outcome {
    let mut errors = Vec::new();
    for n in [32, 64, 128] {
        let (data, _) = skew_data(n);
        let c = christoffel_contraction(&data, &validate(&data)).unwrap();
        let fd = christoffel_fd(*data.grid(), &skew_conjugator, &conformal_exponent);
        errors.push(max_diff(&c, &fd));
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    outcome(
        orders.iter().all(|o| *o >= 1.8),
        format!("residuals {:.2e}, {:.2e}, {:.2e}; orders {:.2}, {:.2} (min 1.8)", errors[0], errors[1], errors[2], orders[0], orders[1]),
    )
}

fn symplectic_family() -> Outcome {
    let deltas = [0.02, 0.03, 0.04, 0.05];
    let members: Vec<_> = deltas.iter().map(|&d| family_member(64, d)).collect();
    let mut k_max: f64 = 0.0;
    for (data, f) in &members {
        k_max = k_max.max(run_mainnew(data, f, &MainnewOptions::default()).unwrap().k);
    }
    let opts = MainnewOptions { k_bound: Some(k_max), ..MainnewOptions::default() };
    let mut pass = true;
    let mut c8 = Vec::new();
    let mut failed = Vec::new();
    for ((data, f), d) in members.iter().zip(deltas) {
        let r = run_mainnew(data, f, &opts).unwrap();
        let phi_ok = r.levels.iter().all(|l| l.phi_max <= l.phi_tolerance);
        let ok = r.pass && phi_ok && r.sup_abs_phi <= r.c8 * (1.0 + r.l1_norm);
        if !ok {
            failed.push(format!("δ={d}: {:?}", r.stages.iter().find(|s| !s.pass).map(|s| &s.stage)));
        }
        pass &= ok;
        c8.push(r.c8);
    }
    let mean = c8.iter().sum::<f64>() / c8.len() as f64;
    let spread = c8.iter().map(|c| (c / mean - 1.0).abs()).fold(0.0, f64::max);
    pass &= c8.iter().all(|c| c.is_finite()) && spread <= 0.2;
    outcome(
        pass,
        format!(
            "δ ∈ {{0.02..0.05}}, N = 64, K = {k_max:.4}; C₈ ≈ {mean:.3e}, spread {:.1}% (max 20%){}",
            100.0 * spread,
            if failed.is_empty() { String::new() } else { format!("; failed {}", failed.join(", ")) }
        ),
    )
}

fn stability() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (n, size, p, levels) in [(1usize, 32usize, 2.0, 8usize), (2, 8, 4.0, 6)] {
        let grid = TorusGrid::new(n, size).unwrap();
        let f = normalize_log_density(&ScalarField::from_fn(grid, |x| 0.5 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin()));
        let g = normalize_log_density(&ScalarField::from_fn(grid, |x| 0.4 * (2.0 * PI * (x[0] - x[1])).sin()));
        let sweep = stability_sweep(&f, &g, p, 10.0, levels, &SolveOptions::default()).unwrap();
        pass &= sweep.pass;
        notes.push(format!("n={n}: C {:.2e}, slope {:.2} vs β {:.3}", sweep.constant, sweep.slope, sweep.beta_ref));
    }
    outcome(pass, notes.join("; "))
}

fn report(index: usize, name: &str, budget: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = run();
    let elapsed = start.elapsed();
    let in_budget = elapsed <= budget;
    let pass = o.pass && in_budget;
    println!(
        "{} {index:>2} {name}: {} [{:.1} s, budget {} s{}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_budget { "" } else { ", exceeded" }
    );
    pass
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    results.push(report(1, "constant formulas", secs(1), constant_formulas));
    results.push(report(2, "one-dimensional Poisson reduction", secs(10), poisson_reduction));
    let start = Instant::now();
    let instances = comparison_instances();
    let solve_time = start.elapsed();
    results.push(report(3, "comparison inequality", secs(600).saturating_sub(solve_time), || {
        comparison_inequality(&instances)
    }));
    results.push(report(4, "De Giorgi soundness", secs(30), degiorgi_soundness));
    results.push(report(5, "L∞ chain", secs(600), || linfty_chain(&instances)));
    results.push(report(6, "real Monge-Ampère", secs(120), real_monge_ampere));
    results.push(report(7, "Green's functions", secs(300), green_functions));
    results.push(report(8, "Christoffel identity order", secs(120), christoffel_order));
    results.push(report(9, "almost-Kähler end-to-end", secs(600), symplectic_family));
    results.push(report(10, "stability sweep", secs(600), stability));
    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
