//! `formu`: dissolution simulation, inverse design, LLM prediction and
//! benchmarking from the command line.

mod args;
mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::args::UNITS;
use crate::config::AppConfig;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "formu", version, about = "Drug powder dissolution toolkit", after_help = UNITS)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// JSON config file (llm, conditions, store_path, fixtures_path, output_dir, seed).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Root for run directories. Overrides the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Name of the run directory instead of `<command>-<UTC timestamp>`.
    #[arg(long, global = true)]
    pub run_name: Option<String>,
    /// Seed for the design multi-start. Overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSONL record store. Overrides the config.
    #[arg(long, global = true, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Record set for few-shot examples and benchmarks. Overrides the config.
    #[arg(long, global = true, value_name = "FILE")]
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a release profile from powder properties.
    Simulate(commands::simulate::SimulateArgs),
    /// Find a particle size distribution that reproduces a target profile.
    Design(commands::design::DesignArgs),
    /// Ask a language model (or an offline backend) for a release profile.
    Predict(commands::predict::PredictArgs),
    /// Manage the formulation record store.
    Store(commands::store::StoreArgs),
    /// Run the five-strategy benchmark over a record set.
    Bench(commands::bench::BenchArgs),
    /// MSE and R² between a reference and a predicted profile.
    Eval(commands::eval::EvalArgs),
}

fn load_config(global: &Global) -> CliResult<AppConfig> {
    let mut cfg = AppConfig::load(global.config.as_deref())?;
    if let Some(dir) = &global.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(s) = &global.store {
        cfg.store_path = Some(s.clone());
    }
    if let Some(f) = &global.fixtures {
        cfg.fixtures_path = f.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load_config(&cli.global)?;
    let g = &cli.global;
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a, cfg, g),
        Command::Design(a) => commands::design::run(a, cfg, g),
        Command::Predict(a) => commands::predict::run(a, cfg, g),
        Command::Store(a) => commands::store::run(a, cfg),
        Command::Bench(a) => commands::bench::run(a, cfg, g),
        Command::Eval(a) => commands::eval::run(a, cfg, g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
