//! The named experiments. Each returns a JSON result, an optional CSV table
//! and a pass flag.

use std::f64::consts::PI;
use std::fmt::Write as _;

use auxma::comparison::{self, ComparisonVariant};
use auxma::degiorgi::{self, GrowthVariant};
use auxma::functionals::{self, build_profile};
use auxma::green::{self, MetricField};
use auxma::solver_cma::{normalize_density, solve_cma, SolveOptions};
use auxma::stability::{self, normalize_log_density};
use auxma::symplectic::{self, AlmostComplexData, MainnewOptions};
use auxma::{Error, OperatorSpec, ScalarField, TorusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig, Recipe};

pub struct Outcome {
    pub result: Value,
    pub csv: Option<String>,
    pub pass: bool,
    pub summary: String,
}

type Run = auxma::Result<Outcome>;

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn grid(cfg: &ExperimentConfig) -> auxma::Result<TorusGrid> {
    TorusGrid::new(cfg.n, cfg.size)
}

/// Field built from the density recipe with the given seed.
pub fn density_field(cfg: &ExperimentConfig, grid: TorusGrid, seed: u64) -> ScalarField {
    let amp = cfg.density.amplitude;
    match cfg.density.recipe {
        Recipe::Zero => ScalarField::zeros(grid),
        Recipe::Cosine => ScalarField::from_fn(grid, |x| amp * x.iter().map(|t| (2.0 * PI * t).cos()).product::<f64>()),
        Recipe::Random => {
            let m = grid.real_dim();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let terms: Vec<(Vec<f64>, f64, f64)> = (0..cfg.density.modes)
                .map(|_| {
                    let mut freq: Vec<f64> = (0..m).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
                    if freq.iter().all(|f| *f == 0.0) {
                        freq[rng.gen_range(0..m)] = 1.0;
                    }
                    (freq, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
                })
                .collect();
            let raw = ScalarField::from_fn(grid, |x| {
                terms
                    .iter()
                    .map(|(k, c, phase)| c * (2.0 * PI * k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase).cos())
                    .sum()
            });
            let sup = raw.sup_norm();
            if sup > 0.0 {
                raw.map(|v| amp * v / sup)
            } else {
                raw
            }
        }
    }
}

fn solve_options(cfg: &ExperimentConfig) -> SolveOptions {
    SolveOptions { tol: cfg.tolerances.solve, ..SolveOptions::default() }
}

fn profile_levels(phi: &ScalarField, count: usize) -> Vec<f64> {
    let top = (-phi.min()).max(0.0);
    let top = if top > 0.0 { top } else { 1.0 };
    (0..count).map(|i| top * i as f64 / (count - 1) as f64).collect()
}

fn csv_string(write: impl FnOnce(&mut Vec<u8>) -> auxma::Result<()>) -> auxma::Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

pub fn run(cfg: &ExperimentConfig) -> Run {
    match cfg.experiment.expect("resolved config names its experiment") {
        Experiment::Linfty => linfty(cfg),
        Experiment::EntropyEnergy => entropy_energy(cfg),
        Experiment::Stability => stability_sweep(cfg),
        Experiment::Green => green_slice(cfg),
        Experiment::Diameter => diameter(cfg),
        Experiment::Symplectic => symplectic_pipeline(cfg),
        Experiment::DegiorgiSuite => degiorgi_suite(cfg),
    }
}

fn linfty(cfg: &ExperimentConfig) -> Run {
    let grid = grid(cfg)?;
    let n = cfg.n;
    let op = OperatorSpec::from_kind(cfg.operator, n)?;
    let density = normalize_density(&density_field(cfg, grid, cfg.seed));
    let opts = solve_options(cfg);
    let (phi, solve) = solve_cma(&op, &density.f_omega.map(f64::exp), &opts)?;
    let sup = phi.sup_norm();
    let profile = build_profile(&phi, None, &profile_levels(&phi, cfg.linfty.profile_levels))?;
    let p = cfg.linfty.p.unwrap_or(2.0 * n as f64);
    let delta0 = (p - n as f64) / (n as f64 * p);
    let bound = comparison::linfty_from_profile(&profile, None, delta0, &phi)?;
    let mut comparisons = Vec::new();
    let mut compare_pass = true;
    for &frac in &cfg.linfty.level_fractions {
        let s = frac * sup;
        let cmp =
            comparison::kahler_comparison(&op, &phi, s, cfg.linfty.ell, cfg.linfty.a, ComparisonVariant::KahlerLemma3, &opts)?;
        let report = cmp.with_epsilon_scale(&phi, 1.0)?;
        let pass = report.max_value <= cfg.tolerances.phi * report.slack_scale;
        compare_pass &= pass;
        comparisons.push(json!({
            "s": s,
            "ell": cmp.ell,
            "b": cmp.constants.b,
            "epsilon": cmp.constants.epsilon,
            "lambda": cmp.constants.lambda,
            "constants": to_json(&cmp.constants),
            "phi_report": to_json(&report),
            "critical_epsilon_factor": cmp.critical_epsilon_factor,
            "auxiliary": to_json(&cmp.auxiliary),
            "pass": pass,
        }));
    }
    let entropy = functionals::entropy_report(&phi, &density.f_omega, p);
    let pass = compare_pass && bound.pass;
    Ok(Outcome {
        result: json!({
            "operator": to_json(&op),
            "solve": to_json(&solve),
            "c_omega": density.c_omega,
            "sup_abs_phi": sup,
            "s0": bound.s0,
            "linfty": to_json(&bound),
            "entropy": to_json(&entropy),
            "comparisons": comparisons,
        }),
        csv: Some(csv_string(|w| profile.write_csv(w))?),
        pass,
        summary: format!("sup|φ| = {sup:.6e}, S₀ = {:.6e}", bound.s0),
    })
}

fn entropy_energy(cfg: &ExperimentConfig) -> Run {
    let grid = grid(cfg)?;
    let n = cfg.n as f64;
    let op = OperatorSpec::from_kind(cfg.operator, cfg.n)?;
    let density = normalize_density(&density_field(cfg, grid, cfg.seed));
    let (phi, solve) = solve_cma(&op, &density.f_omega.map(f64::exp), &solve_options(cfg))?;
    let p = cfg.linfty.p.unwrap_or(2.0 * n);
    let entropy = functionals::entropy_report(&phi, &density.f_omega, p);
    let energy_p = n / 2.0;
    let q = functionals::trudinger_exponent(cfg.n, energy_p)
        .ok_or_else(|| Error::InvalidArgument(format!("no Trudinger exponent for p = {energy_p}")))?;
    let trudinger = functionals::trudinger_energy_check(&phi, &density.f_omega, energy_p, q, 0.1);
    let split = functionals::young_split(&phi.map(|v| (-v).max(0.0)), &density.f_omega, p)?;
    let finite = [entropy.ent_p, entropy.nash_p, entropy.energy, trudinger.exponential_integral, trudinger.energy_moment]
        .iter()
        .all(|v| v.is_finite());
    let pass = finite && split.young_holds && split.split_holds;
    Ok(Outcome {
        result: json!({
            "operator": to_json(&op),
            "solve": to_json(&solve),
            "entropy": to_json(&entropy),
            "trudinger": to_json(&trudinger),
            "young": {
                "p": split.p,
                "c_p": split.c_p,
                "young_holds": split.young_holds,
                "split_holds": split.split_holds,
            },
        }),
        csv: None,
        pass,
        summary: format!("Ent_p = {:.6e}, energy = {:.6e}", entropy.ent_p, entropy.energy),
    })
}

fn stability_sweep(cfg: &ExperimentConfig) -> Run {
    if cfg.density.recipe == Recipe::Zero || cfg.density.amplitude == 0.0 {
        return Err(Error::InvalidArgument("stability needs two distinct densities; use a nonzero recipe".into()));
    }
    let grid = grid(cfg)?;
    let n = cfg.n as f64;
    let f = normalize_log_density(&density_field(cfg, grid, cfg.seed));
    let f_tilde = normalize_log_density(&density_field(cfg, grid, cfg.seed.wrapping_add(1)));
    let p = cfg.stability.p.unwrap_or(n + 1.0);
    let k_bound = cfg
        .stability
        .k_bound
        .unwrap_or_else(|| 2.0 * stability::log_entropy(&f, p).max(stability::log_entropy(&f_tilde, p)) + 1.0);
    let sweep = stability::stability_sweep(&f, &f_tilde, p, k_bound, cfg.stability.levels, &solve_options(cfg))?;
    Ok(Outcome {
        result: json!({ "k_bound": k_bound, "sweep": to_json(&sweep) }),
        csv: Some(csv_string(|w| sweep.write_csv(w))?),
        pass: sweep.pass,
        summary: format!("C = {:.6e}, slope = {:.4}, β = {:.4}", sweep.constant, sweep.slope, sweep.beta_ref),
    })
}

fn metric(cfg: &ExperimentConfig) -> auxma::Result<MetricField> {
    let grid = grid(cfg)?;
    match cfg.density.recipe {
        Recipe::Zero => Ok(MetricField::flat(grid)),
        _ => MetricField::conformal(&density_field(cfg, grid, cfg.seed)),
    }
}

fn green_slice(cfg: &ExperimentConfig) -> Run {
    let metric = metric(cfg)?;
    let slice = green::green_slice(&metric, cfg.green.source)?;
    let (dq, ds) = green::default_exponents(cfg.n);
    let norms = green::green_norms(&slice, cfg.green.q.unwrap_or(dq), cfg.green.s.unwrap_or(ds));
    let (inf, argmin) = green::green_lower_bound(&slice);
    let scale = slice.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let pass = slice.weighted_mean.abs() <= 1e-10 * scale && slice.conservation_residual <= 1e-8;
    let grid = *metric.grid();
    let mut csv = String::from("node,coords,value,gradient\n");
    for (i, (v, g)) in slice.values.iter().zip(slice.gradient_magnitude()).enumerate() {
        let coords: Vec<String> = grid.coords(i).iter().map(|c| c.to_string()).collect();
        let _ = writeln!(csv, "{i},{},{v},{g}", coords.join(" "));
    }
    Ok(Outcome {
        result: json!({
            "source": slice.source,
            "volume": metric.volume(),
            "weighted_mean": slice.weighted_mean,
            "conservation_residual": slice.conservation_residual,
            "iterations": slice.iterations,
            "norms": to_json(&norms),
            "infimum": inf,
            "infimum_node": argmin,
        }),
        csv: Some(csv),
        pass,
        summary: format!("‖G‖_q = {:.6e}, ‖∇G‖_s = {:.6e}", norms.value_norm, norms.gradient_norm),
    })
}

fn diameter(cfg: &ExperimentConfig) -> Run {
    let metric = metric(cfg)?;
    let report = green::diameter_bound(&metric)?;
    Ok(Outcome {
        summary: format!("diameter = {:.6e}, bound = {:.6e}", report.true_diameter, report.bound),
        pass: report.pass,
        result: to_json(&report),
        csv: None,
    })
}

fn symplectic_pipeline(cfg: &ExperimentConfig) -> Run {
    let grid = grid(cfg)?;
    let sc = &cfg.symplectic;
    let delta = sc.delta;
    let w = ScalarField::from_fn(grid, |x| {
        delta * ((2.0 * PI * (x[0] + x[1])).cos() + 0.5 * (2.0 * PI * x[1]).sin())
    });
    let (data, f) = AlmostComplexData::conjugated(grid, symplectic::diagonal_stretch(sc.stretch), &w)?;
    let opts = MainnewOptions {
        r0: sc.r0,
        k_bound: sc.k_bound,
        epsilon_scale: sc.epsilon_scale,
        phi_tolerance: cfg.tolerances.phi,
        ..MainnewOptions::default()
    };
    let report = symplectic::run_mainnew(&data, &f, &opts)?;
    let mut csv = String::from("s,phi,excess\n");
    for i in 0..report.profile.s.len() {
        let _ = writeln!(csv, "{},{},{}", report.profile.s[i], report.profile.phi[i], report.profile.excess[i]);
    }
    let failed: Vec<&str> = report.stages.iter().filter(|s| !s.pass).map(|s| s.stage.as_str()).collect();
    Ok(Outcome {
        summary: if failed.is_empty() {
            format!("sup|φ| = {:.6e}, C₈ = {:.6e}", report.sup_abs_phi, report.c8)
        } else {
            format!("failed stages: {}", failed.join(", "))
        },
        pass: report.pass,
        result: to_json(&report),
        csv: Some(csv),
    })
}

fn random_steps(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(0.01..1.0)).collect()
}

fn degiorgi_suite(cfg: &ExperimentConfig) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let len = cfg.degiorgi.samples;
    let mut csv = String::from("profile,variant,delta,minimal_constant,bound,checked,violation\n");
    let (mut checked, mut violations) = ([0usize; 2], [0usize; 2]);
    for idx in 0..cfg.degiorgi.profiles {
        let delta = rng.gen_range(0.1..2.0);

        let mut s = vec![0.0];
        for d in random_steps(&mut rng, len - 1) {
            s.push(s.last().unwrap() + d);
        }
        let zeros = rng.gen_range(0..len / 2);
        let mut v: f64 = (0..len).map(|_| rng.gen_range(0.0..1.0)).sum();
        let mut phi = Vec::with_capacity(len);
        for i in 0..len {
            phi.push(if i + zeros >= len { 0.0 } else { v });
            v = (v - rng.gen_range(0.0..1.0)).max(0.0);
        }
        let cert = degiorgi::verify_growth(&s, &phi, GrowthVariant::Decreasing, 0.0, delta)?;
        let s0 = degiorgi::vanishing_bound(cert.minimal_constant, delta, phi[0])?;
        let inside = cert.minimal_constant.is_finite() && s0 < *s.last().unwrap();
        let bad = inside && degiorgi::step_value(&s, &phi, s0) != 0.0;
        checked[0] += inside as usize;
        violations[0] += bad as usize;
        let _ = writeln!(csv, "{idx},decreasing,{delta},{},{s0},{inside},{bad}", cert.minimal_constant);

        let mut levels = Vec::with_capacity(len);
        let mut acc = 0.0;
        for d in random_steps(&mut rng, len) {
            acc += d;
            levels.push(acc);
        }
        let mut value = rng.gen_range(1e-3..1.0);
        let rising: Vec<f64> = (0..len)
            .map(|_| {
                value += rng.gen_range(0.0..1.0);
                value
            })
            .collect();
        let cert = degiorgi::verify_growth(&levels, &rising, GrowthVariant::Increasing, 0.0, delta)?;
        let mut worst = f64::INFINITY;
        let mut bad = false;
        for (level, value) in levels.iter().zip(&rising) {
            let c0 = degiorgi::lower_bound(cert.minimal_constant, delta, *level)?;
            worst = worst.min(value - c0);
            bad |= *value < c0 * (1.0 - 1e-12);
        }
        checked[1] += 1;
        violations[1] += bad as usize;
        let _ = writeln!(csv, "{idx},increasing,{delta},{},{worst},true,{bad}", cert.minimal_constant);
    }
    let pass = violations == [0, 0];
    Ok(Outcome {
        result: json!({
            "profiles": cfg.degiorgi.profiles,
            "decreasing": { "checked": checked[0], "violations": violations[0] },
            "increasing": { "checked": checked[1], "violations": violations[1] },
        }),
        csv: Some(csv),
        pass,
        summary: format!("violations: {} decreasing, {} increasing", violations[0], violations[1]),
    })
}
