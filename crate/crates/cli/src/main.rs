//! `rigmaint`: rigidity checks, closed-loop simulation and trace comparison.
//!
//! Exit codes: 0 success, 1 error or rejected input, 2 framework not
//! rigid (`check`), 3 eigenvalue requirement violated (`sim`).

mod compare;
mod overrides;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rigmaint_core::sim::{self, Scenario};
use rigmaint_core::{rigidity_report, FrameworkFile, WeightedFramework};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "rigmaint", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rigidity report of a static framework with unit weights.
    Check(Io),
    /// Run a scenario and write its trace and summary.
    Sim(Io),
    /// Summarize estimation errors and topology changes of a trace.
    Compare(Io),
}

#[derive(Args)]
struct Io {
    /// Input file (framework, scenario or trace, by subcommand).
    #[arg(short, long)]
    input: PathBuf,
    /// Output path. `check`: report file (default stdout). `sim`: trace CSV,
    /// required. `compare`: directory for the series CSVs (optional).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Override a field of the input document by dotted path, for example
    /// `gains.k2=0.5`. Applied in order after parsing; later wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Suppress the report on stdout.
    #[arg(short, long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check(io) => check(io),
        Command::Sim(io) => simulate(io),
        Command::Compare(io) => compare_cmd(io),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_json(io: &Io) -> Result<Value> {
    let text = fs::read_to_string(&io.input)
        .with_context(|| format!("reading {}", io.input.display()))?;
    let mut doc: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", io.input.display()))?;
    overrides::apply_all(&mut doc, &io.overrides)?;
    Ok(doc)
}

fn emit(io: &Io, text: &str) {
    if !io.quiet {
        println!("{text}");
    }
}

fn check(io: &Io) -> Result<u8> {
    let file: FrameworkFile = serde_json::from_value(load_json(io)?)
        .with_context(|| format!("invalid framework in {}", io.input.display()))?;
    let wf = WeightedFramework::unit(file.graph()?, file.positions()?)?;
    let report = rigidity_report(&wf);
    let text = serde_json::to_string_pretty(&report)?;
    match &io.output {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => emit(io, &text),
    }
    Ok(if report.is_rigid { 0 } else { 2 })
}

/// `trace.csv` -> `trace.summary.json`
fn summary_path(trace: &Path) -> PathBuf {
    trace.with_extension("summary.json")
}

fn simulate(io: &Io) -> Result<u8> {
    let out = io
        .output
        .as_ref()
        .context("sim needs --output for the trace CSV")?;
    let scenario = Scenario::from_value(load_json(io)?)
        .with_context(|| format!("invalid scenario in {}", io.input.display()))?;
    let run = sim::run(scenario)?;

    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    run.trace.write_csv(&mut w)?;
    w.flush()?;
    let text = serde_json::to_string_pretty(&run.summary)?;
    let spath = summary_path(out);
    fs::write(&spath, &text).with_context(|| format!("writing {}", spath.display()))?;
    emit(io, &text);
    Ok(if run.summary.lambda_ok { 0 } else { 3 })
}

fn compare_cmd(io: &Io) -> Result<u8> {
    if !io.overrides.is_empty() {
        anyhow::bail!("compare takes no --set overrides");
    }
    let file = File::open(&io.input).with_context(|| format!("opening {}", io.input.display()))?;
    let series = compare::read_series(file)?;
    let report = compare::compare(&series);
    if let Some(dir) = &io.output {
        compare::write_series(&series, dir)?;
    }
    emit(io, &serde_json::to_string_pretty(&report)?);
    Ok(0)
}
