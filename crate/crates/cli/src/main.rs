//! Experiment runner: flows, Trotter studies, odd flows, transport checks, connection round
//! trips and the full verification suite.

mod checks;
mod run;
mod schema;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use supertransport::exec::Exec;
use supertransport::ode::OdeConfig;

use crate::checks::{Ctx, CHECKS};
use crate::run::{ExperimentSpec, Report, RunError, VerifyAllSpec};

#[derive(Parser)]
#[command(name = "supertransport", version, about = "Flows, graded connections and 1|1 parallel transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec (the full verification suite when no spec is given)
    Run(RunArgs),
    /// Print the named checks and what each one verifies
    ListChecks {
        /// Print as JSON instead of a table
        #[arg(long)]
        json: bool,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment spec (JSON)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory for the report
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for random probe generation
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// ODE tolerance per unit time
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Write <kind>.json (default)
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Write <kind>.csv
    #[arg(long)]
    csv: bool,
    /// Evaluate checks on one thread
    #[arg(long)]
    sequential: bool,
}

const EXIT_ASSERTION: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListChecks { json } => {
            list_checks(json);
            ExitCode::SUCCESS
        }
        Command::Run(args) => match execute(&args) {
            Ok(report) => {
                for r in &report.results {
                    println!("{} {} residual={:e} tol={:e} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.residual, r.tolerance, r.detail);
                }
                if report.passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_ASSERTION)
                }
            }
            Err(RunError::Schema(e)) => {
                eprintln!("schema error at {e}");
                ExitCode::from(EXIT_SCHEMA)
            }
            Err(RunError::Divergence(msg)) => {
                eprintln!("divergence: {msg}");
                ExitCode::from(EXIT_DIVERGENCE)
            }
            Err(RunError::Failed(msg)) => {
                eprintln!("failed: {msg}");
                ExitCode::from(EXIT_ASSERTION)
            }
        },
    }
}

fn list_checks(json: bool) {
    if json {
        let items: Vec<_> = CHECKS.iter().map(|c| serde_json::json!({ "name": c.name, "anchor": c.anchor })).collect();
        println!("{}", serde_json::to_string_pretty(&items).expect("serializable"));
    } else {
        let width = CHECKS.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in CHECKS {
            println!("{:width$}  {}", c.name, c.anchor);
        }
    }
}

fn execute(args: &RunArgs) -> Result<Report, RunError> {
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(schema::SchemaError { location: "--tol".into(), message: "must be a positive number".into() }.into());
    }
    let spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| schema::SchemaError { location: path.display().to_string(), message: e.to_string() })?;
            schema::parse::<ExperimentSpec>(&text)?
        }
        None => ExperimentSpec::VerifyAll(VerifyAllSpec::default()),
    };
    let ctx = Ctx { seed: args.seed, ode: OdeConfig::with_tol(args.tol), exec: if args.sequential { Exec::Sequential } else { Exec::Parallel } };
    let report = run::run(&spec, &ctx)?;
    write_report(&report, &args.out, args.csv).map_err(|e| RunError::Failed(format!("writing report: {e}")))?;
    Ok(report)
}

fn write_report(report: &Report, out: &Path, csv: bool) -> Result<(), Box<dyn std::error::Error>> {
    fs::create_dir_all(out)?;
    if csv {
        let mut w = csv::Writer::from_path(out.join(format!("{}.csv", report.kind)))?;
        match &report.trotter_rows {
            Some(rows) => {
                w.write_record(["n", "error", "observed_order"])?;
                for r in rows {
                    w.write_record([r.n.to_string(), format!("{:e}", r.error), r.observed_order.map(|o| format!("{o:.6}")).unwrap_or_default()])?;
                }
            }
            None => {
                w.write_record(["name", "anchor", "residual", "tolerance", "passed"])?;
                for r in &report.results {
                    w.write_record([r.name.clone(), r.anchor.clone(), format!("{:e}", r.residual), format!("{:e}", r.tolerance), r.passed.to_string()])?;
                }
            }
        }
        w.flush()?;
    } else {
        let text = serde_json::to_string_pretty(report)?;
        fs::write(out.join(format!("{}.json", report.kind)), text + "\n")?;
    }
    Ok(())
}
