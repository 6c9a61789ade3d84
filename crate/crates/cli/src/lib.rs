//! Command-line driver: argument parsing, run orchestration, metrics and the
//! multi-process rank launcher.

pub mod args;
pub mod commands;
pub mod metrics;
mod procs;

use std::ffi::OsString;
use std::path::Path;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser};
use fdflow::{parse_problem, validate_problem, Problem};
use thiserror::Error;

pub use args::{Cli, Command, Mode};
pub use commands::{bench, execute_run, BenchReport, RunOutcome};
pub use metrics::Metrics;

/// Errors that decide the process exit status.
#[derive(Debug, Error)]
pub enum Failure {
    /// Bad flags, unreadable or invalid specification: exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Non-finite values or a failed comparison: exit status 1.
    #[error("{0}")]
    Numeric(String),
}

/// Maps an error to the process exit status.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Failure>() {
        Some(Failure::Usage(_)) => 2,
        _ => 1,
    }
}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Failure::Usage(msg.into()).into()
}

/// Reads, parses and validates a specification file; warnings go to stderr.
pub fn load_problem(path: &Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read specification {}: {e}", path.display())))?;
    let problem = parse_problem(&text).map_err(|e| usage(format!("{}:{e}", path.display())))?;
    let report = validate_problem(&problem);
    for w in &report.warnings {
        eprintln!("{}: {w}", path.display());
    }
    if !report.is_ok() {
        let msgs: Vec<String> = report
            .errors
            .iter()
            .map(|d| format!("{}: {d}", path.display()))
            .collect();
        return Err(usage(msgs.join("\n")));
    }
    Ok(problem)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let name = subcommand_name(&cli.command);
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = exit_code(&e);
            if code == 2 {
                let mut cmd = Cli::command();
                cmd.build();
                if let Some(sub) = cmd.find_subcommand_mut(name) {
                    eprintln!("\n{}", sub.render_usage());
                    eprintln!("For more information, try 'fdflow {name} --help'.");
                }
            }
            code
        }
    }
}

fn subcommand_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Run(_) => "run",
        Command::Bench(_) => "bench",
        Command::Compare(_) => "compare",
        Command::Listing(_) => "listing",
        Command::Check(_) => "check",
        Command::Analytic(_) => "analytic",
        Command::PlotCsv(_) => "plot-csv",
        Command::RankWorker(_) => "rank-worker",
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(a) => commands::cmd_run(&a),
        Command::Bench(a) => commands::cmd_bench(&a),
        Command::Compare(a) => commands::cmd_compare(&a),
        Command::Listing(a) => commands::cmd_listing(&a),
        Command::Check(a) => commands::cmd_check(&a),
        Command::Analytic(a) => commands::cmd_analytic(&a),
        Command::PlotCsv(a) => commands::cmd_plot_csv(&a),
        Command::RankWorker(a) => procs::worker(&a),
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}
