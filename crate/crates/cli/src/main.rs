#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{ConfigError, Experiment, ExperimentConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "auxma", version, about = "Numerical experiments for a priori estimates of complex Hessian equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML configuration file; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Overrides AUXMA_OUT and the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the density recipe; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary line.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a Hessian equation, check the comparison function and the L∞ bound.
    Linfty(RunArgs),
    /// Entropy, Trudinger moment and Young split of a solved instance.
    EntropyEnergy(RunArgs),
    /// Sup-norm gap of two solutions against the L¹ distance of their densities.
    Stability(RunArgs),
    /// One Green's function slice with its norms and conservation residual.
    Green(RunArgs),
    /// Diameter bound from Green's function gradients against the shortest-path diameter.
    Diameter(RunArgs),
    /// Almost-Kähler Calabi-Yau pipeline on a conjugated almost-complex structure.
    Symplectic(RunArgs),
    /// Soundness of the De Giorgi vanishing and lower bounds on random profiles.
    DegiorgiSuite(RunArgs),
    /// Parse and check a configuration, printing the resolved form.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// List the available experiments.
    List,
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn output_dir(args: &RunArgs, cfg: &ExperimentConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("AUXMA_OUT").map(PathBuf::from))
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_outputs(dir: &Path, report: &serde_json::Value, csv: Option<&str>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(dir.join("report.json"), text)?;
    if let Some(csv) = csv {
        std::fs::write(dir.join("profile.csv"), csv)?;
    }
    Ok(())
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> ExitCode {
    let cfg = match load(args.config.as_deref()).and_then(|c| c.resolve(experiment, args.seed)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let dir = output_dir(args, &cfg);
    let outcome = experiments::run(&cfg);
    let (report, csv, pass, summary) = match outcome {
        Ok(o) => {
            let report = json!({
                "experiment": experiment.name(),
                "config": cfg,
                "pass": o.pass,
                "result": o.result,
            });
            (report, o.csv, o.pass, o.summary)
        }
        Err(e) => {
            let report = json!({
                "experiment": experiment.name(),
                "config": cfg,
                "pass": false,
                "error": e.to_string(),
            });
            (report, None, false, format!("error: {e}"))
        }
    };
    if let Err(e) = write_outputs(&dir, &report, csv.as_deref()) {
        eprintln!("cannot write outputs to {}: {e}", dir.display());
        return ExitCode::from(EXIT_RUNTIME);
    }
    if !args.quiet {
        println!("{} {}: {summary}", if pass { "PASS" } else { "FAIL" }, experiment.name());
    }
    if report.get("error").is_some() {
        ExitCode::from(EXIT_RUNTIME)
    } else if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{:<16}{}", e.name(), e.summary());
            }
            return ExitCode::SUCCESS;
        }
        Command::ValidateConfig { config, quiet } => {
            let checked = ExperimentConfig::load(&config).and_then(|c| match c.experiment {
                Some(e) => c.resolve(e, None),
                None => c.validate().map(|_| c),
            });
            return match checked {
                Ok(c) => {
                    if !quiet {
                        println!("{}", serde_json::to_string_pretty(&c).unwrap_or_default());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            };
        }
        Command::Linfty(a) => (Experiment::Linfty, a),
        Command::EntropyEnergy(a) => (Experiment::EntropyEnergy, a),
        Command::Stability(a) => (Experiment::Stability, a),
        Command::Green(a) => (Experiment::Green, a),
        Command::Diameter(a) => (Experiment::Diameter, a),
        Command::Symplectic(a) => (Experiment::Symplectic, a),
        Command::DegiorgiSuite(a) => (Experiment::DegiorgiSuite, a),
    };
    run_experiment(experiment, &args)
}
