//! `richcore` command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;

pub mod args;
pub mod commands;
pub mod error;
pub mod input;
pub mod json;
pub mod pipeline;

use args::{Cli, Command};
use commands::{bench_from_args, cmd_adversarial, cmd_build, cmd_verify, RunConfig};
use error::{CliResult, EXIT_OK, EXIT_USAGE};

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Build(args) => {
            let config = RunConfig::from_args(&args)?;
            let report = cmd_build(&config)?;
            emit(config.out.as_deref(), &(json::to_string_pretty(&report) + "\n"))
        }
        Command::Verify(args) => {
            let config = RunConfig::from_args(&args)?;
            let report = cmd_verify(&config)?;
            emit(config.out.as_deref(), &(json::to_string_pretty(&report) + "\n"))
        }
        Command::Bench(args) => {
            let (config, output) = bench_from_args(&args)?;
            let mut text = output.lines().join("\n");
            text.push('\n');
            emit(config.out.as_deref(), &text)
        }
        Command::Adversarial(args) => {
            let report = cmd_adversarial(&args)?;
            emit(args.out.as_deref(), &(json::to_string_pretty(&report) + "\n"))
        }
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("richcore: {e}");
            e.exit_code()
        }
    }
}
