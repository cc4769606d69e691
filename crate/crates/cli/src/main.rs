//! `ctmix`: simulation, overlap experiments and change-point inference.

mod commands;
mod config;
mod error;
mod meta;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Config, Key};
use crate::error::{CliError, CliResult};

/// Continuous-time mixture weight processes.
///
/// Every command takes an optional flat `key = value` config file plus
/// `key=value` overrides. Exit codes: 0 success, 2 config error, 3 data
/// error, 4 property-check failure.
#[derive(Parser)]
#[command(name = "ctmix", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` overrides applied after the file.
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Weight traces for one model (and data for the change-point model).
    Simulate(RunArgs),
    /// Expected overlap of every model on a shrinking lag grid.
    Dichotomy(RunArgs),
    /// Component indices along the convergent time grid.
    Figure1(RunArgs),
    /// Posterior inference of change points for a `t,y` CSV.
    Infer(RunArgs),
    /// Seeded invariant checks; exits 4 if any fails.
    Validate(RunArgs),
}

type Runner = fn(&Config) -> CliResult<()>;

fn dispatch(command: &Command) -> (&'static str, &'static [&'static [Key]], &RunArgs, Runner) {
    use commands::*;
    match command {
        Command::Simulate(a) => (
            "simulate",
            &[simulate::KEYS, commands::MODEL_KEYS],
            a,
            simulate::run,
        ),
        Command::Dichotomy(a) => ("dichotomy", &[dichotomy::KEYS], a, dichotomy::run),
        Command::Figure1(a) => ("figure1", &[figure1::KEYS], a, figure1::run),
        Command::Infer(a) => ("infer", &[infer::KEYS], a, infer::run),
        Command::Validate(a) => ("validate", &[validate::KEYS], a, validate::run),
    }
}

fn thread_count(config: &Config) -> CliResult<usize> {
    match std::env::var("CTMIX_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "environment CTMIX_THREADS: expected a thread count, got `{v}`"
            ))
        }),
        Err(_) => config.get("threads"),
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let (name, schemas, args, run) = dispatch(&cli.command);
    let schema: Vec<Key> = schemas
        .iter()
        .flat_map(|s| s.iter())
        .map(|k| config::key(k.name, k.default, k.help))
        .collect();
    let config = Config::load(name, &schema, args.config.as_deref(), &args.overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(&config)?)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| run(&config))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ctmix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
