//! `htb <command> --config <path> [--out <path>] [--seed <u64>] [--paths <n>]`
//!
//! Worker threads come from `HTB_WORKERS` (default: all cores). Exit codes:
//! 0 pass, 1 check failed, 2 config error, 3 runtime error.

use std::path::PathBuf;
use std::process;

use clap::{Parser, ValueEnum};

use htb::config::{parse_config_with, Command, Overrides};
use htb::harness::{run, ExitCode};
use htb::rng::{with_workers, workers_from_env};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Simulate,
    Price,
    VerifyMeasure,
    VerifyCorrelation,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Price => Command::Price,
            Cmd::VerifyMeasure => Command::VerifyMeasure,
            Cmd::VerifyCorrelation => Command::VerifyCorrelation,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "htb", version, about = "Hard-to-borrow stock model: simulation, measure-change checks, pricing")]
struct Cli {
    command: Cmd,
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Output file (overrides `run.output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `run.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of paths (overrides `run.n_paths`).
    #[arg(long)]
    paths: Option<usize>,
}

fn main() {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            process::exit(ExitCode::ConfigError as i32);
        }
    };
    let overrides =
        Overrides { command: Some(cli.command.into()), n_paths: cli.paths, seed: cli.seed, output: cli.out };
    let cfg = match parse_config_with(&text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            process::exit(ExitCode::ConfigError as i32);
        }
    };
    let result = match workers_from_env() {
        Some(n) => with_workers(n, || run(&cfg)),
        None => run(&cfg),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            process::exit(outcome.exit as i32);
        }
        Err(e) => {
            eprintln!("error: {e}");
            process::exit(ExitCode::for_error(&e) as i32);
        }
    }
}
