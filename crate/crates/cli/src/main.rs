//! `uep`: decide, generate and verify unitary equivalence instances.
//!
//! Exit codes: 0 YES (or verified), 1 NO (or rejected certificate),
//! 2 INCONCLUSIVE, 3 malformed input, 4 invalid algebra, 5 usage error.

mod decide;
mod format;
mod generate;
mod verify;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use uep::Verdict;

#[derive(Debug, Parser)]
#[command(name = "uep", version, about = "Simultaneous unitary equivalence of matrix pairs and local-unitary equivalence of states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide an instance file and print a verdict document.
    Decide(decide::DecideArgs),
    /// Generate a seeded random instance.
    Gen(generate::GenArgs),
    /// Check a certificate against an instance without running the solver.
    Verify(verify::VerifyArgs),
}

/// Errors that end a run before a verdict.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Algebra(String),
    Usage(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 3,
            Failure::Algebra(_) => 4,
            Failure::Usage(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Algebra(m) | Failure::Usage(m) => m,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(5),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Decide(args) => decide::cmd_decide(args).map(|v| match v {
            Verdict::Yes => 0,
            Verdict::No => 1,
            Verdict::Inconclusive => 2,
        }),
        Command::Gen(args) => generate::cmd_gen(args).map(|()| 0),
        Command::Verify(args) => verify::cmd_verify(args).map(|ok| if ok { 0 } else { 1 }),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
