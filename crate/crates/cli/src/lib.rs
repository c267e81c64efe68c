//! Command-line driver: flag and config parsing, dispatch, and JSON/CSV
//! report emission with a fixed exit-code contract (0 pass, 2 invariant
//! failure, 3 configuration error).

pub mod args;
pub mod commands;
pub mod config;
pub mod parse;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, ImpedanceCmd, MaxwellCmd, RelationCmd, SurfaceCmd};
use commands::Outcome;
use config::{CliError, CliResult, EXIT_CONFIG, EXIT_INVARIANT, EXIT_PASS};
use report::{Report, SCHEMA_VERSION};

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Relation(RelationCmd::Check(_)) => "relation check",
        Command::Surface(SurfaceCmd::Info(_)) => "surface info",
        Command::Impedance(ImpedanceCmd::Classify(_)) => "impedance classify",
        Command::Impedance(ImpedanceCmd::Extend(_)) => "impedance extend",
        Command::Maxwell1d(MaxwellCmd::Evolve(_)) => "maxwell1d evolve",
        Command::Maxwell1d(MaxwellCmd::Range(_)) => "maxwell1d range",
        Command::Maxwell1d(MaxwellCmd::Green(_)) => "maxwell1d green",
        Command::Suite(_) => "suite",
    }
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    let tol = &cli.global.tol;
    match &cli.command {
        Command::Relation(RelationCmd::Check(a)) => commands::relation_check(a, tol),
        Command::Surface(SurfaceCmd::Info(a)) => commands::surface_info_cmd(a, tol),
        Command::Impedance(ImpedanceCmd::Classify(a)) => commands::impedance_classify(a, tol),
        Command::Impedance(ImpedanceCmd::Extend(a)) => commands::impedance_extend(a, tol),
        Command::Maxwell1d(MaxwellCmd::Evolve(a)) => commands::maxwell_evolve(a, tol),
        Command::Maxwell1d(MaxwellCmd::Range(a)) => commands::maxwell_range(a, tol),
        Command::Maxwell1d(MaxwellCmd::Green(a)) => commands::maxwell_green(a, tol),
        Command::Suite(a) => commands::suite(a, tol, cli.global.seed, cli.global.timing),
    }
}

/// Runs one command and assembles its report.
pub fn run(cli: &Cli) -> CliResult<(Report, Option<String>)> {
    let start = Instant::now();
    let out = dispatch(cli)?;
    let passed = out.checks.verdicts.values().all(|v| v.passed);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: command_name(&cli.command).to_string(),
        config: serde_json::to_value(cli).expect("config serializes"),
        seed: cli.global.seed,
        passed,
        verdicts: out.checks.verdicts,
        tolerances: out.tolerances,
        result: out.result,
        timing: cli
            .global
            .timing
            .then(|| json!({ "seconds": start.elapsed().as_secs_f64() })),
    };
    Ok((report, out.csv))
}

fn write_to(path: Option<&Path>, text: &str, fallback_stderr: bool) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::field("--output", format!("{}: {e}", p.display()))),
        None if fallback_stderr => {
            let _ = std::io::stderr().write_all(text.as_bytes());
            Ok(())
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Config(format!("stdout: {e}")))
        }
    }
}

fn emit(cli: &Cli, report: &Report, csv: Option<String>) -> CliResult<()> {
    let json = report.to_json();
    match csv {
        Some(csv) => {
            write_to(cli.global.output.as_deref(), &csv, false)?;
            let side = match &cli.command {
                Command::Maxwell1d(MaxwellCmd::Evolve(a)) => a.report.as_deref(),
                _ => None,
            };
            write_to(side, &json, true)
        }
        None => write_to(cli.global.output.as_deref(), &json, false),
    }
}

/// Full driver: returns the process exit code.
pub fn execute(argv: Vec<OsString>) -> i32 {
    let argv = match config::expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            };
        }
    };
    let (report, csv) = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    if let Err(e) = emit(&cli, &report, csv) {
        eprintln!("{e}");
        return e.exit_code();
    }
    if report.passed {
        EXIT_PASS
    } else {
        for name in report.failed() {
            let v = &report.verdicts[name];
            eprintln!(
                "invariant failed: {name} (value {:e}, {} {:e})",
                v.value, v.check, v.tolerance
            );
        }
        EXIT_INVARIANT
    }
}
