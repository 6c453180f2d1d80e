//! `minrisk` binary: exit code 0 on success, 1 on runtime failures
//! (missing files, singular covariance, non-convergence), 2 on usage and
//! configuration errors. Data goes to stdout or `--output`, everything
//! else to stderr.

mod args;
mod commands;

use clap::Parser;

use args::{Cli, Command, OutputFormat};
use commands::Ctx;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

fn main() {
    let cli = Cli::parse();
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(0),
        output: cli.output.clone(),
        format: cli.format.unwrap_or(OutputFormat::Csv),
        verbosity: cli.verbosity,
    };
    let outcome = match &cli.command {
        Command::Predict(args) => commands::run_predict(&ctx, args),
        Command::Gen(args) => commands::run_gen(&ctx, args),
        Command::Solve(args) => commands::run_solve(&ctx, args),
        Command::Simulate(args) => commands::run_simulate(&ctx, args),
        Command::Compare(args) => commands::run_compare(&ctx, args),
        Command::Reproduce(args) => commands::run_reproduce(&ctx, args),
    };
    match outcome {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}
