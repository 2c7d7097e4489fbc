#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod spec;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use output::Output;
use spec::{Command, Flags, RunSpec};

/// Invariant-region-preserving DG solvers for the p-system.
#[derive(Parser, Debug)]
#[command(name = "irp", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a preset to its final time.
    Run(Flags),
    /// Convergence table at h, h/2, ….
    Table(Flags),
    /// Sample the exact Riemann solution.
    Riemann(Flags),
    /// Dense invariant-region membership scan.
    Scan(Flags),
    /// Limiter parameters of the initial projection.
    Theta(Flags),
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("IRP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("IRP_THREADS: expected a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("IRP_THREADS")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match &cli.command {
        Cmd::Run(f) => (Command::Run, f),
        Cmd::Table(f) => (Command::Table, f),
        Cmd::Riemann(f) => (Command::Riemann, f),
        Cmd::Scan(f) => (Command::Scan, f),
        Cmd::Theta(f) => (Command::Theta, f),
    };
    match execute(command, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns false when a certified invariant was violated.
fn execute(command: Command, flags: &Flags) -> Result<bool> {
    configure_threads()?;
    let spec = RunSpec::parse(command, flags)?;
    let header = spec.header();
    print!("{header}");
    let mut out = Output::create(spec.out.clone())?;
    out.write("spec.txt", &header)?;
    let outcome = commands::execute(&spec, &mut out)?;
    if !outcome.violations.is_empty() {
        let report: String = outcome.violations.iter().map(|v| format!("{v}\n")).collect();
        eprint!("certified invariant violated:\n{report}");
        out.write("violations.txt", &report)?;
    }
    let manifest = out.finish()?;
    println!("# manifest {}", manifest.display());
    Ok(outcome.violations.is_empty())
}
