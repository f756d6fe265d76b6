//! `weaksplit`: symbolic order checks, weak-error experiments and generator
//! defect scans driven by a flat TOML configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};

use commands::Globals;
use weaksplit::montecarlo::with_threads;

#[derive(Parser, Debug)]
#[command(
    name = "weaksplit",
    version,
    about = "Weak approximation of Lévy-driven SDEs by operator splitting"
)]
struct Cli {
    /// Seed for every random stream; overrides the config `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for path simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides the config `out_dir` (default "out").
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Validate and print the resolved plan without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measure the formal order of built-in schemes or scheme expressions.
    #[command(group(ArgGroup::new("input").required(true).multiple(true).args(["scheme", "expr"])))]
    VerifyAlgebra {
        /// Built-in scheme name (repeatable).
        #[arg(long)]
        scheme: Vec<String>,
        /// Scheme expression, e.g. "1/2*exp(1,0) exp(1,1) + 1/2*exp(1,1) exp(1,0)" (repeatable).
        #[arg(long)]
        expr: Vec<String>,
        /// Number of Brownian coordinates.
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Highest degree compared.
        #[arg(long, default_value_t = 3)]
        max_order: usize,
    },
    /// Weak-error experiment for one scheme.
    Run { config: PathBuf },
    /// Weak-error comparison of several schemes.
    Convergence { config: PathBuf },
    /// Per-step generator defects of the ignore and AR cutoffs against eps.
    DefectScan { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let globals = Globals {
        seed: cli.seed,
        out_dir: cli.out_dir,
        dry_run: cli.dry_run,
    };
    let command = cli.command;
    let outcome = with_threads(cli.threads, move || match &command {
        Command::VerifyAlgebra {
            scheme,
            expr,
            d,
            max_order,
        } => commands::verify_algebra(scheme, expr, *d, *max_order),
        Command::Run { config } => commands::run(config, &globals),
        Command::Convergence { config } => commands::convergence(config, &globals),
        Command::DefectScan { config } => commands::defect_scan(config, &globals),
    });
    match outcome {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
