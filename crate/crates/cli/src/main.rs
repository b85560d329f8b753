//! Command-line runner for pragmatic hypothesis tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod dataset;
mod error;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, TestKind};
use crate::error::{CliError, CliResult};
use crate::run::Run;

/// Environment variable holding the worker-thread count.
const WORKERS_ENV: &str = "PROTEST_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "protest", version, about = "Posterior tests of pragmatic hypotheses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Linear-model adherence of a regression function.
    Adherence(RunArgs),
    /// Goodness of fit to a parametric family.
    Gof(RunArgs),
    /// A quantile equals a given value.
    Quantile(RunArgs),
    /// Two samples share one distribution.
    TwoSample(RunArgs),
    /// Compute the threshold from the configured calibration strategy.
    Calibrate(RunArgs),
    /// Export the rejection boundary over the configured levels as CSV.
    Region(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured number of posterior draws.
    #[arg(long)]
    draws: Option<usize>,
    /// Output path; stdout when neither this nor `output` is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &RunArgs, expect: Option<TestKind>) -> CliResult<Run> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(t) = expect {
        if cfg.test != t {
            return Err(CliError::config(
                "test",
                format!("config declares {}, subcommand runs {}", cfg.test.name(), t.name()),
            ));
        }
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.draws {
        cfg.n_draws = n;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    Run::new(cfg)
}

fn emit(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn execute(command: &Command) -> CliResult<()> {
    let (args, test) = match command {
        Command::Adherence(a) => (a, Some(TestKind::Adherence)),
        Command::Gof(a) => (a, Some(TestKind::Gof)),
        Command::Quantile(a) => (a, Some(TestKind::Quantile)),
        Command::TwoSample(a) => (a, Some(TestKind::TwoSample)),
        Command::Calibrate(a) | Command::Region(a) => (a, None),
    };
    let run = load(args, test)?;
    let text = match command {
        Command::Calibrate(_) => run.calibrate()?,
        Command::Region(_) => run.region()?,
        _ => run.test()?,
    };
    emit(run.output(), &text)
}

fn configure_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::config(WORKERS_ENV, format!("`{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(WORKERS_ENV, e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let started = Instant::now();
    let result = configure_workers().and_then(|()| execute(&cli.command));
    log::info!("finished in {:.3} s", started.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
