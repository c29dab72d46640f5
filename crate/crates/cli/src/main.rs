mod commands;
mod scenario;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::Outcome;
use scenario::Scenario;

#[derive(Parser)]
#[command(name = "glsfield", version, about = "Entropy certificates and Monte Carlo confidence regions for random fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario and list every problem found.
    Validate(Common),
    /// Certify path regularity or the CLT from an entropy model.
    Certify(Common),
    /// Tabulate the tail bound for a given norm.
    Tailbound(Common),
    /// Covering numbers, ball function and net hierarchy of a finite space.
    Entropy(Common),
    /// Estimate the mixed norm of a process by simulation.
    MixedNorm(Common),
    /// Compare normalized sums against the Gaussian limit.
    CltCheck(Common),
    /// Estimate a parametric integral with a confidence region.
    McEstimate(Common),
    /// Measure confidence-region coverage over repeated experiments.
    McCoverage(Common),
    /// Normalized sums of a random lacunary trigonometric series.
    DemoLacunary(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file in TOML.
    scenario: PathBuf,
    /// Root seed; overrides the scenario.
    #[arg(long, env = "GLSFIELD_SEED")]
    seed: Option<u64>,
    /// Directory for the report and tables.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override a scenario value, e.g. `--set mc.n=500`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for the parallel kernels.
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (&'static str, Common) {
        match self {
            Command::Validate(c) => ("validate", c),
            Command::Certify(c) => ("certify", c),
            Command::Tailbound(c) => ("tailbound", c),
            Command::Entropy(c) => ("entropy", c),
            Command::MixedNorm(c) => ("mixed-norm", c),
            Command::CltCheck(c) => ("clt-check", c),
            Command::McEstimate(c) => ("mc-estimate", c),
            Command::McCoverage(c) => ("mc-coverage", c),
            Command::DemoLacunary(c) => ("demo-lacunary", c),
        }
    }
}

/// Writes through a sibling temp file so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn write_outputs(command: &str, scenario: &Scenario, dir: &Path, outcome: &Outcome, started: Instant) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let stem = scenario
        .output
        .as_ref()
        .and_then(|o| o.name.clone())
        .unwrap_or_else(|| command.to_string());
    let mut table_files = Vec::new();
    for table in &outcome.tables {
        let file = format!("{stem}.{}.txt", table.name);
        write_atomic(&dir.join(&file), &table.render())?;
        table_files.push(file);
    }
    let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let report = json!({
        "tool": "glsfield",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": scenario.seed,
        "status": outcome.status.label(),
        "result": outcome.result,
        "notes": outcome.notes,
        "tables": table_files,
        "scenario": scenario,
        "timestamp": { "unix": unix, "wall_seconds": started.elapsed().as_secs_f64() },
    });
    let path = dir.join(format!("{stem}.json"));
    write_atomic(&path, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(path)
}

fn run(command: &'static str, common: Common) -> Result<ExitCode> {
    let started = Instant::now();
    let mut scenario = scenario::load(&common.scenario, &common.overrides)?;
    if common.seed.is_some() {
        scenario.seed = common.seed;
    }
    if common.threads.is_some() {
        scenario.threads = common.threads;
    }
    let problems = scenario::diagnostics(&scenario, command);
    if command == "validate" {
        if problems.is_empty() {
            println!("ok");
            return Ok(ExitCode::SUCCESS);
        }
        for p in &problems {
            println!("{p}");
        }
        return Ok(ExitCode::from(1));
    }
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("error: {p}");
        }
        return Ok(ExitCode::from(1));
    }
    if let Some(t) = scenario.threads {
        if !glsfield::exec::configure_threads(t) {
            eprintln!("warning: thread pool already configured; --threads {t} ignored");
        }
    }
    let outcome = commands::run(command, &scenario)?;
    let dir = common
        .out_dir
        .or_else(|| scenario.output.as_ref().and_then(|o| o.dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let path = write_outputs(command, &scenario, &dir, &outcome, started)?;
    for note in &outcome.notes {
        eprintln!("note: {note}");
    }
    println!("{}: {} ({})", command, outcome.status.label(), path.display());
    Ok(ExitCode::from(outcome.status.exit_code() as u8))
}

fn main() -> ExitCode {
    let (command, common) = Cli::parse().command.split();
    match run(command, common) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
