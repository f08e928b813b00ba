//! phaselab: scenario runner for the quantum-evolution laboratory.
//!
//! Exit codes: 0 all checks passed, 1 verification failure, 2 usage or
//! validation error.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use phaselab_core::propagator::{check_cyclic, propagate};
use phaselab_core::scenario::{
    resolve, run_scenario, run_sweep, write_trajectory_csv, Analysis, Report, Scenario,
};
use phaselab_core::verify;
use phaselab_core::wframe::{build_w_frame, write_frame_csv};
use phaselab_core::Error;

#[derive(Parser)]
#[command(
    name = "phaselab",
    about = "Propagate finite-dimensional quantum states and cross-validate their geometric phases",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file with all its analyses and print the JSON report.
    Simulate {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Write the propagated trajectory as CSV.
        #[arg(long)]
        traj_out: Option<PathBuf>,
    },
    /// Run the phase decomposition of a scenario and print a comparison table.
    Phases {
        scenario: PathBuf,
    },
    /// Build the periodic comoving frame of a scenario.
    Frame {
        scenario: PathBuf,
        /// Write the frame as CSV (node time + row-major re/im entries).
        #[arg(long)]
        frame_out: Option<PathBuf>,
    },
    /// Re-run a scenario over a list of parameter values; emit one CSV row each.
    Sweep {
        scenario: PathBuf,
        /// Parameter to sweep: mu_b, omega, or theta.
        #[arg(long)]
        axis: String,
        /// Comma-separated parameter values (empty list allowed).
        #[arg(long)]
        values: String,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Endpoint interference of a scenario, exact and unsigned conventions.
    Interfere {
        scenario: PathBuf,
    },
    /// Run the built-in verification suite (all criteria, or one).
    Verify {
        /// Run a single criterion (1-12) instead of the full suite.
        #[arg(long)]
        criterion: Option<u32>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn pass_code(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate { scenario, traj_out } => {
            let (doc, base) = load(&scenario)?;
            let mut report = run_scenario(&doc, &base)?;
            stamp(&mut report);
            if let Some(path) = traj_out {
                let resolved = resolve(&doc, &base)?;
                let traj = propagate(&resolved.spec, &resolved.initial, &resolved.grid)?;
                let mut out = BufWriter::new(File::create(&path)?);
                write_trajectory_csv(&traj, &mut out)?;
            }
            println!("{}", report.to_json()?);
            Ok(pass_code(report.overall_pass))
        }
        Command::Phases { scenario } => {
            let (mut doc, base) = load(&scenario)?;
            doc.analyses = vec![Analysis::Phases];
            let report = run_scenario(&doc, &base)?;
            print_tables(&report);
            Ok(pass_code(report.overall_pass))
        }
        Command::Frame { scenario, frame_out } => {
            let (mut doc, base) = load(&scenario)?;
            doc.analyses = vec![Analysis::Frame];
            let report = run_scenario(&doc, &base)?;
            if let Some(path) = frame_out {
                let resolved = resolve(&doc, &base)?;
                let traj = propagate(&resolved.spec, &resolved.initial, &resolved.grid)?;
                let verdict = check_cyclic(&traj, None)?;
                let frame = build_w_frame(&traj, &verdict)?;
                let mut out = BufWriter::new(File::create(&path)?);
                write_frame_csv(&frame, &mut out)?;
            }
            print_tables(&report);
            Ok(pass_code(report.overall_pass))
        }
        Command::Sweep {
            scenario,
            axis,
            values,
            out,
        } => {
            let (doc, base) = load(&scenario)?;
            let values = parse_values(&values)?;
            let table = run_sweep(&doc, &axis, &values, &base)?;
            match out {
                Some(path) => {
                    let mut file = BufWriter::new(File::create(&path)?);
                    table.write_csv(&mut file)?;
                }
                None => print!("{}", table.to_csv()),
            }
            let pass_col = phaselab_core::scenario::SWEEP_HEADER
                .iter()
                .position(|h| *h == "pass")
                .expect("schema has a pass column");
            let all_pass = table.rows.iter().all(|row| row[pass_col] == "true");
            Ok(pass_code(all_pass))
        }
        Command::Interfere { scenario } => {
            let (mut doc, base) = load(&scenario)?;
            doc.analyses = vec![Analysis::Interfere];
            let report = run_scenario(&doc, &base)?;
            print_tables(&report);
            Ok(pass_code(report.overall_pass))
        }
        Command::Verify { criterion } => {
            let summary = match criterion {
                Some(id) => {
                    if !(1..=12).contains(&id) {
                        return Err(Error::Scenario {
                            message: format!("--criterion must be 1..=12 (got {id})"),
                        });
                    }
                    let result = verify::run_criterion(id);
                    let all_pass = result.pass;
                    verify::VerifySummary {
                        total_seconds: result.seconds,
                        results: vec![result],
                        all_pass,
                    }
                }
                None => verify::run_all(),
            };
            print!("{}", summary.render_table());
            Ok(pass_code(summary.all_pass))
        }
    }
}

fn parse_values(raw: &str) -> Result<Vec<f64>, Error> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>().map_err(|_| Error::Scenario {
                message: format!("--values: `{s}` is not a number"),
            })
        })
        .collect()
}

fn load(path: &Path) -> Result<(Scenario, PathBuf), Error> {
    let scenario = Scenario::from_file(path)?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    Ok((scenario, base))
}

fn stamp(report: &mut Report) {
    report.timestamp_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_millis());
}

fn print_tables(report: &Report) {
    println!("scenario: {}", report.spec_id);
    println!(
        "grid: t_end = {:.6}, steps = {}; seed = {}",
        report.defaults.t_end, report.defaults.steps, report.defaults.seed
    );
    println!(
        "cyclic: {} (endpoint overlap magnitude {:.12})",
        report.cyclicity.is_cyclic, report.cyclicity.overlap_magnitude
    );
    if let Some(phases) = &report.phases {
        println!(
            "phases: total {:+.9}, dynamical {:+.9}, geometric {:+.9}, berry {}",
            phases.total_phase,
            phases.dynamical,
            phases.aa_phase,
            phases
                .berry_phase
                .map(|g| format!("{g:+.9}"))
                .unwrap_or_else(|| "n/a".into()),
        );
    }
    if !report.oracle_rows.is_empty() {
        println!("{:<38} {:>16} {:>16} {:>10} {:>9}  outcome", "quantity", "numeric", "analytic", "|diff|", "tol");
        for row in &report.oracle_rows {
            println!(
                "{:<38} {:>16.9} {:>16} {:>10} {:>9}  {}",
                row.quantity,
                row.numeric,
                row.analytic
                    .map(|v| format!("{v:+.9}"))
                    .unwrap_or_else(|| "-".into()),
                row.abs_diff
                    .map(|v| format!("{v:.2e}"))
                    .unwrap_or_else(|| "-".into()),
                if row.tolerance.is_finite() {
                    format!("{:.1e}", row.tolerance)
                } else {
                    "-".into()
                },
                if row.pass { "pass" } else { "FAIL" },
            );
        }
    }
    for row in &report.residual_rows {
        println!(
            "residual {:<38} {:>12.3e} (tol {:.1e})  {}",
            row.name,
            row.value,
            row.tolerance,
            if row.pass { "pass" } else { "FAIL" }
        );
    }
    for row in &report.verdicts {
        println!(
            "verdict {:<24} {}  [{}]",
            row.name,
            if row.pass { "pass" } else { "FAIL" },
            row.detail
        );
    }
    println!("overall: {}", if report.overall_pass { "pass" } else { "FAIL" });
}
