//! `fde-lab`: runs solver, contraction and periodic-orbit experiments from an
//! INI config and writes CSV results.

// `!(x > 0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod ini;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Output};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "fde-lab", version, about = "Delayed evolution equations: solver and contraction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// INI config file; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sampling seed (overrides [experiment] seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Do not echo the summary
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the configured problem and write the trajectory
    Simulate,
    /// Run the contraction, decomposition and equicontinuity checks
    VerifyTheoremA,
    /// Search for a periodic orbit and check it over two periods
    FindPeriodic,
    /// Observed order of the integrator under step refinement
    Convergence,
}

fn thread_pool() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("FDE_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Config(format!("FDE_LAB_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot set up {threads} worker threads: {e}")))
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut cfg = RunConfig::parse(&text).map_err(Failure::Config)?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    thread_pool()?;
    let cfg = load(cli)?;
    let mut out = Output::new(cfg.out_dir.clone(), cli.quiet);
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::VerifyTheoremA => commands::verify_theorem_a(&cfg, &mut out),
        Command::FindPeriodic => commands::find_periodic_orbit(&cfg, &mut out),
        Command::Convergence => commands::convergence(&cfg, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("fde-lab: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
