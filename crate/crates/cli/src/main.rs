//! `bnk`: solve, simulate and estimate the behavioral New Keynesian model
//! and build identification-robust confidence sets from the command line.

mod commands;
mod config;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};

/// Worker threads for the parallel parts of the computation.
const WORKERS_ENV: &str = "BNK_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "bnk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the model at the configured parameters.
    Solve,
    /// Simulate observables from the model.
    Simulate,
    /// Maximum-likelihood estimates of the full model.
    FitMl,
    /// LM projection confidence sets by uniform draws.
    LmCs,
    /// Continuous-updating GMM estimate of one equation.
    FitGmm,
    /// Robust, non-robust and two-step confidence sets over a grid.
    TwoStepCs,
    /// Every table and figure of the empirical study.
    Replicate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::FitMl => "fit-ml",
            Command::LmCs => "lm-cs",
            Command::FitGmm => "fit-gmm",
            Command::TwoStepCs => "two-step-cs",
            Command::Replicate => "replicate",
        }
    }
}

#[derive(Debug, Args)]
struct Flags {
    /// Key-value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Input panel CSV.
    #[arg(long, global = true, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Nominal test level.
    #[arg(long, global = true, value_name = "F")]
    alpha: Option<f64>,
    /// Minimum size distortion of the preliminary set.
    #[arg(long = "gamma-min", global = true, value_name = "F")]
    gamma_min: Option<f64>,
    /// `paper`, `appendix`, `appendix_c` or `lo:hi:step, lo:hi:step`.
    #[arg(long, global = true, value_name = "SPEC")]
    grid: Option<String>,
    #[arg(long, global = true, value_parser = ["is", "nkpc"])]
    equation: Option<String>,
}

fn configure_workers() -> Result<usize> {
    let Ok(text) = std::env::var(WORKERS_ENV) else {
        return Ok(rayon::current_num_threads());
    };
    let n: usize = text
        .trim()
        .parse()
        .with_context(|| format!("{WORKERS_ENV} = `{text}` is not a worker count"))?;
    if n == 0 {
        bail!("{WORKERS_ENV} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(n)
}

fn run(cli: Cli) -> Result<()> {
    let f = cli.flags;
    let overrides = Overrides {
        data: f.data,
        out: f.out,
        seed: f.seed,
        alpha: f.alpha,
        gamma_min: f.gamma_min,
        grid: f.grid,
        equation: f.equation,
    };
    let cfg = RunConfig::resolve(f.config.as_deref(), &overrides)?;
    let workers = configure_workers()?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
    commands::write_manifest(&cfg, cli.command.name(), workers)?;
    let summary = match cli.command {
        Command::Solve => commands::solve(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::FitMl => commands::fit_ml(&cfg),
        Command::LmCs => commands::lm_cs(&cfg),
        Command::FitGmm => commands::fit_gmm(&cfg),
        Command::TwoStepCs => commands::two_step_cs(&cfg),
        Command::Replicate => commands::replicate(&cfg),
    }
    .with_context(|| format!("{} failed", cli.command.name()))?;
    println!("{summary}");
    println!("outputs in {}", cfg.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("bnk: error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
