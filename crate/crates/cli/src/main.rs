use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coxradar_cli::{
    run_cityfit, run_experiment, run_interferers, run_sample, CliError, ExperimentConfig, HourlyConfig, MethodChoice,
    Result,
};

/// Radar interference and detection experiments on Poisson/binomial line Cox processes.
#[derive(Parser)]
#[command(name = "coxradar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configuration's method.
    #[arg(long, global = true, value_enum)]
    method: Option<MethodChoice>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one Palm realization and write its vehicles.
    Sample,
    /// Detection-probability sweep, analytic by default.
    Detect,
    /// Detection-probability sweep by Monte Carlo, plus power densities if configured.
    Montecarlo,
    /// Interfering intervals of one realization and mean interferer counts.
    Interferers,
    /// Fit PLP/BLP parameters for every city directory under `--data`.
    Fit {
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit cities and compute hourly detection probabilities.
    Hourly {
        #[arg(long)]
        data: PathBuf,
    },
}

/// Loads `--config`, applying `--seed` and then `--method`, the subcommand's
/// forced method, or the configured one, in that order.
fn experiment(common: &Common, forced: Option<MethodChoice>) -> Result<ExperimentConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.method = common.method.or(forced).unwrap_or(cfg.method);
    Ok(cfg)
}

fn hourly_config(common: &Common) -> Result<HourlyConfig> {
    match &common.config {
        Some(path) => HourlyConfig::load(path),
        None => Ok(HourlyConfig::default()),
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let common = &cli.common;
    match cli.command {
        Command::Sample => Ok(vec![run_sample(&experiment(common, None)?, &common.out)?]),
        Command::Detect => run_experiment(&experiment(common, None)?, &common.out),
        Command::Montecarlo => run_experiment(&experiment(common, Some(MethodChoice::Mc))?, &common.out),
        Command::Interferers => run_interferers(&experiment(common, None)?, &common.out),
        Command::Fit { data } => run_cityfit(&data, &common.out, &hourly_config(common)?, false),
        Command::Hourly { data } => run_cityfit(&data, &common.out, &hourly_config(common)?, true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
