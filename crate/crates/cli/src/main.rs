use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use qthydro::harness::{
    load_config, run_classification_report, run_relaxation, run_stability_map,
    run_temperature_sweep, write_config, ScenarioConfig, CONFIG_ENV,
};

/// Two-velocity stochastic hydrodynamics laboratory.
///
/// Exit codes: 0 completed, 2 diverged, 3 Picard iteration failed,
/// 1 usage or configuration error.
#[derive(Parser)]
#[command(name = "qthydro", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario config file; defaults apply when absent.
    #[arg(long, short, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set init.epsilon=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Directory for output files (overrides `output_dir`).
    #[arg(long, short)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Relax a localized perturbation and write snapshots.
    Relax(ConfigArgs),
    /// Classify the initial field under all three systems.
    Classify(ConfigArgs),
    /// Tabulate max|η| over a·γ × θ and sample the stability boundary.
    StabilityMap {
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10,100")]
        a_gamma: Vec<f64>,
        #[arg(long, default_value_t = 256)]
        theta_samples: usize,
        #[arg(long, default_value_t = 4096)]
        curve_samples: usize,
        #[arg(long, short, default_value = "out/stability")]
        output_dir: PathBuf,
    },
    /// Run the warm-vacuum system at several temperatures.
    SweepTemperature {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1,2,4")]
        temperatures: Vec<f64>,
    },
    /// Parse and validate a config, printing the fully resolved form.
    ValidateConfig(ConfigArgs),
}

fn resolve(args: &ConfigArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    for o in &args.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(dir) = &args.output_dir {
        cfg.output_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Relax(args) => {
            let cfg = resolve(&args)?;
            let outcome = run_relaxation(&cfg, &cfg.output_dir)?;
            let r = &outcome.report;
            println!(
                "{}: {} after {} steps (max Picard iterations {})",
                r.system,
                r.status.as_str(),
                r.steps_taken,
                r.max_picard_iterations
            );
            if let Some(msg) = &r.failure {
                println!("  {msg}");
            }
            if let Some(th) = &outcome.two_hump {
                println!("  two-hump at t = {:.6}: {}", th.t, th.detected);
            }
            println!("  wrote {} files to {}", outcome.files.len(), cfg.output_dir.display());
            Ok(outcome.exit_code() as u8)
        }
        Command::Classify(args) => {
            let cfg = resolve(&args)?;
            let (report, _) = run_classification_report(&cfg, &cfg.output_dir)?;
            for s in &report.systems {
                let tag = s.uniform_type.map_or("mixed", |t| t.as_str());
                match s.speed_range {
                    Some((lo, hi)) => println!("{:<12} {tag} (u + v in [{lo}, {hi}])", s.system),
                    None => println!("{:<12} {tag}", s.system),
                }
            }
            Ok(0)
        }
        Command::StabilityMap {
            a_gamma,
            theta_samples,
            curve_samples,
            output_dir,
        } => {
            anyhow::ensure!(!a_gamma.is_empty(), "--a-gamma must not be empty");
            anyhow::ensure!(theta_samples > 0, "--theta-samples must be positive");
            let outcome = run_stability_map(&a_gamma, theta_samples, curve_samples, &output_dir)?;
            println!(
                "all stable: {} (max |eta| = {:.17e})",
                outcome.map.all_stable(),
                outcome.map.worst()
            );
            Ok(0)
        }
        Command::SweepTemperature { config, temperatures } => {
            anyhow::ensure!(
                temperatures.iter().all(|t| t.is_finite() && *t >= 0.0),
                "temperatures must be finite and >= 0"
            );
            let cfg = resolve(&config)?;
            let outcome = run_temperature_sweep(&cfg, &temperatures, &cfg.output_dir)?;
            for e in &outcome.entries {
                println!(
                    "T = {:<8} xi = {:<22} {} ({} steps)",
                    e.temperature,
                    e.xi,
                    e.status.as_str(),
                    e.steps_taken
                );
            }
            Ok(outcome.exit_code() as u8)
        }
        Command::ValidateConfig(args) => {
            let cfg = resolve(&args)?;
            print!("{}", write_config(&cfg));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command).context("qthydro") {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
