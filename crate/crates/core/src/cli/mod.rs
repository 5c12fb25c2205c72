//! Config-driven command-line front end.
//!
//! `finslerkit <command> --config <path> [--out <path>] [--seed <n>]
//! [--tolerance <x>] [--json]`. The CSV goes to `--out` or stdout. With
//! `--json` a summary object is printed to stdout (and the CSV must go to
//! `--out`, or is embedded in the object under `"csv"`); otherwise a short
//! summary goes to stderr.

pub mod commands;
pub mod config;
pub mod expr;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use serde_json::Value;

pub use commands::{run_command, Command, Report};
pub use config::{build_metric, builtin_examples, parse_config, render, BuiltMetric, MetricSpec, RunConfig};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "finslerkit", version, about = "Conic pseudo-Finsler metrics: tensors, convexity, geodesics, separations")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

fn execute(args: &Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Io(format!("{}: {e}", args.config.display())))?;
    let (spec, run) = parse_config(&text)?;
    let report = run_command(args.command, &spec, &run, args.seed, args.tolerance)?;
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let mut summary = report.summary;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &report.csv).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            summary.insert("csv_path".into(), Value::String(path.display().to_string()));
        }
        None if args.json => {
            summary.insert("csv".into(), Value::String(report.csv.clone()));
        }
        None => stdout.write_all(report.csv.as_bytes()).map_err(io)?,
    }
    if args.json {
        let text = serde_json::to_string_pretty(&Value::Object(summary)).expect("summary serializes");
        writeln!(stdout, "{text}").map_err(io)?;
    } else {
        for (k, v) in &summary {
            match v {
                Value::String(s) => writeln!(stderr, "{k}: {s}"),
                _ => writeln!(stderr, "{k}: {v}"),
            }
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Runs the CLI on `argv` and returns the process exit code: 0 on success,
/// 1 for usage and config errors, 2 for domain errors, 3 for numerical
/// failures.
pub fn main_with_args<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match execute(&args, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}
