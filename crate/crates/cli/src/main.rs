use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cantor_lab::runner::{self, RunConfig, VerifyReport};
use cantor_lab::{Error, Result};
use clap::{Parser, Subcommand};

/// Run finite-stage constructions and realizer reductions on a scenario, and
/// verify recorded traces by replay.
#[derive(Parser, Debug)]
#[command(name = "cantor-lab", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Construction or reduction to run; see `list-constructions`.
    #[arg(long)]
    select: Option<String>,
    /// Override the stage budget S.
    #[arg(long)]
    stages: Option<usize>,
    /// Override the depth budget K.
    #[arg(long)]
    depth: Option<usize>,
    /// Override the index budget I.
    #[arg(long = "max-index")]
    max_index: Option<usize>,
    /// Trace file to write, or to read with `--verify` alone.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Replay and check a trace.
    #[arg(long)]
    verify: bool,
    /// Stage stride for the budget sweep during verification.
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the selector catalog.
    ListConstructions,
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Write to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn print_report(r: &VerifyReport) {
    println!("select: {}", r.select);
    match r.first_mismatch {
        None => println!("determinism: pass"),
        Some(n) => println!("determinism: fail (first differing line {n})"),
    }
    for (claim, t) in &r.claims {
        let status = if t.fail == 0 { "pass" } else { "fail" };
        println!("claim {claim}: {status} ({} pass, {} fail)", t.pass, t.fail);
    }
    match r.budget_violation {
        None => println!("budget checks: {} pass", r.budget_checks),
        Some((i, s)) => println!("budget checks: {} run, violation at i={i} s={s}", r.budget_checks),
    }
}

fn exec(cli: Cli) -> Result<u8> {
    if let Some(Command::ListConstructions) = cli.command {
        let mut listing = String::new();
        for e in runner::CATALOG {
            let kind = match e.kind {
                runner::Kind::Construction => "construction",
                runner::Kind::Reduction => "reduction",
            };
            listing.push_str(&format!("{}\t{kind}\t{}\n", e.name, e.summary));
        }
        emit(&listing)?;
        return Ok(0);
    }
    let Some(path) = cli.scenario.as_ref() else {
        // Verify an existing trace.
        let trace = cli.trace.as_ref().filter(|_| cli.verify).ok_or_else(|| {
            Error::Validation("need --scenario and --select, or --verify with --trace".into())
        })?;
        let report = runner::verify(&read(trace)?, cli.stride)?;
        print_report(&report);
        return Ok(if report.ok() { 0 } else { 1 });
    };
    let select = cli.select.clone().ok_or_else(|| Error::Validation("--select is required with --scenario".into()))?;
    let file = runner::load_file(&read(path)?)?;
    let cfg = RunConfig { select, stages: cli.stages, depth: cli.depth, max_index: cli.max_index };
    let (text, trace) = runner::run_text(&file, &cfg)?;
    match &cli.trace {
        Some(p) => std::fs::write(p, &text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None if !cli.verify => emit(&text)?,
        None => {}
    }
    let failed: Vec<_> = trace.failures().collect();
    for w in &failed {
        eprintln!("obligation failed: {} {}", w.claim, w.data);
    }
    eprintln!("{}: {} events, {} obligations, {} failed", cfg.select, trace.events.len(), trace.witnesses.len(), failed.len());
    if cli.verify {
        let report = runner::verify(&text, cli.stride)?;
        print_report(&report);
        if !report.ok() {
            return Ok(1);
        }
    }
    Ok(if failed.is_empty() { 0 } else { 1 })
}

fn main() -> ExitCode {
    match exec(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
