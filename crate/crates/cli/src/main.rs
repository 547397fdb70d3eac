// Negated comparisons are used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::Config;
use error::CliError;
use output::OutDir;

/// Solve measure-driven ODEs and run the mollifier studies described by an
/// experiment config.
#[derive(Parser)]
#[command(name = "mdode", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `run.out`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Seed for the randomized bound trials run by `jumpmap`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Lattice scheme on every mesh of the schedule.
    SolveScheme,
    /// Limit equation under the configured or classified jump rule.
    SolveLimit,
    /// Shifted-tail limits per (delta, u).
    Sigma,
    /// Regime of the mollifier schedule.
    Classify,
    /// Scheme-versus-limit L1 errors along the schedule.
    Study,
    /// Jump maps at one epoch, with the ramp closed form when it applies.
    Jumpmap,
}

fn run(cli: &Cli) -> Result<String, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    let path = cli
        .config
        .clone()
        .unwrap_or_else(|| PathBuf::from("mdode.toml"));
    let cfg = Config::load(&path)?;
    let root = cli
        .out
        .clone()
        .or_else(|| cfg.run.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = OutDir::create(&root)?;
    match cli.command {
        Command::SolveScheme => commands::solve_scheme(&cfg, &out),
        Command::SolveLimit => commands::solve_limit_cmd(&cfg, &out),
        Command::Sigma => commands::sigma(&cfg, &out),
        Command::Classify => commands::classify(&cfg, &out),
        Command::Study => commands::study(&cfg, &out),
        Command::Jumpmap => commands::jumpmap(&cfg, &out, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
