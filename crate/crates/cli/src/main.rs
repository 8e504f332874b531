//! `qcgraft` batch harness: one subcommand per experiment, JSON scenario in,
//! JSON and CSV reports out.

mod run;
mod scenario;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use run::{csv_with_header, report_json, Budget, RunError};

#[derive(Parser)]
#[command(name = "qcgraft", version, about = "Quasiconformal grafting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dilatation scan of an explicit map.
    Dilatation(Common),
    /// Conformal modulus of a grid quadrilateral or annulus.
    Modulus(Common),
    /// Modulus ratio after excising balls of growing radius.
    ExciseScan(Common),
    /// Integer rounding of train-track weights.
    TrackRound(Common),
    /// Branch-by-branch comparison of two graftings.
    GraftCompare(Common),
    /// Cylinder interpolation and gluing.
    InterpDemo(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for `<subcommand>.json`, `.csv` and `.svg`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the grid resolution or sample count.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    svg: bool,
    /// Tolerance override as `key=value`; repeatable.
    #[arg(long = "tolerance", value_name = "KEY=VAL")]
    tolerance: Vec<String>,
}

fn parse_overrides(items: &[String]) -> Result<BTreeMap<String, f64>, RunError> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| RunError::Schema(format!("tolerance `{s}` is not key=value")))?;
            let v: f64 = v.trim().parse().map_err(|_| RunError::Schema(format!("tolerance `{s}` has a non-numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Dilatation(a) => ("dilatation", a),
        Command::Modulus(a) => ("modulus", a),
        Command::ExciseScan(a) => ("excise-scan", a),
        Command::TrackRound(a) => ("track-round", a),
        Command::GraftCompare(a) => ("graft-compare", a),
        Command::InterpDemo(a) => ("interp-demo", a),
    };
    match execute(name, args) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<RunError>().map_or(2, RunError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn execute(name: &str, args: &Common) -> anyhow::Result<bool> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| RunError::Schema(format!("cannot read {}: {e}", args.scenario.display())))?;
    let budget = Budget { grid: args.grid, svg: args.svg, overrides: parse_overrides(&args.tolerance)? };
    let outcome = run::run(name, &text, &budget)?;
    let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let json = serde_json::to_string_pretty(&report_json(&outcome.report, &stamp))?;

    for c in &outcome.report.checks {
        println!("{} {}: value {:.6e}, bound {:.6e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(format!("{name}.json")), &json)?;
            fs::write(dir.join(format!("{name}.csv")), csv_with_header(&outcome.csv, &stamp))?;
            if let Some(svg) = &outcome.svg {
                fs::write(dir.join(format!("{name}.svg")), svg)?;
            }
        }
        None => println!("{json}"),
    }
    if args.svg && outcome.svg.is_none() {
        eprintln!("note: {name} has no SVG output");
    }
    if !outcome.report.pass && outcome.report.checks.is_empty() {
        return Err(anyhow!("no checks were evaluated"));
    }
    Ok(outcome.report.pass)
}
