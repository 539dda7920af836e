//! Command-line front end.
//!
//! Thin layer over the library: loads a scenario (file or preset), runs the
//! requested experiment, prints a one-line summary per detector, and writes
//! machine-readable artifacts (JSON summary embedding the fully resolved
//! config, plus flat CSV tables) to the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{
    coincidence_scan, epsilon_invariance_scan, run_basis_measurement, run_detection,
    RunStatistics,
};
use crate::observables::{ergodicity_report, position_density};
use crate::scenario::{ObservableKind, ResolvedScenario, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "pcsft",
    version,
    about = "Click statistics of threshold detectors fed by classical random signals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the detection experiment and report per-detector click statistics.
    Run(CommonArgs),
    /// Re-run the experiment across detection thresholds spanning a decade.
    ScanEpsilon(CommonArgs),
    /// Sweep the calibration constant and count double clicks per window.
    ScanCoincidence(CommonArgs),
    /// Compare the time average against the ensemble average.
    Ergodicity(CommonArgs),
    /// Measure in a generalized orthonormal basis instead of position cells.
    Basis(CommonArgs),
    /// List built-in presets, or write one out as a scenario file.
    Presets(PresetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (JSON).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in preset name instead of a scenario file.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Override the scenario's RNG seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory for JSON/CSV artifacts (created if missing). Without
    /// it only the console summary is printed.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    pub format: OutputFormat,
    /// Worker threads for replicas (0 = all cores). Results do not depend on
    /// the thread count.
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub threads: usize,
    /// Also write the raw click log as clicks.csv.
    #[arg(long)]
    pub click_log: bool,
}

#[derive(Debug, Args)]
pub struct PresetArgs {
    /// Preset to write out; lists all presets when omitted.
    pub name: Option<String>,
    /// Destination file for the scenario JSON (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Execute one parsed command line.
pub fn run_command(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => with_scenario(&args, "run", |resolved, out| {
            let stats = run_detection(&resolved.config)?;
            print_run_summary(&stats);
            if let Some(out) = out {
                write_run_artifacts(&args, resolved, &stats, out, "run_summary.csv")?;
            }
            Ok(serde_json::to_value(&stats)?)
        }),
        Command::Basis(args) => with_scenario(&args, "basis", |resolved, out| {
            let stats = run_basis_measurement(&resolved.config, &resolved.basis)?;
            print_run_summary(&stats);
            if let Some(out) = out {
                write_run_artifacts(&args, resolved, &stats, out, "basis_summary.csv")?;
            }
            Ok(serde_json::to_value(&stats)?)
        }),
        Command::ScanEpsilon(args) => with_scenario(&args, "scan-epsilon", |resolved, out| {
            let report = epsilon_invariance_scan(&resolved.config, &resolved.epsilons)?;
            for slope in &report.lambda_slopes {
                println!(
                    "{}: log lambda / log epsilon slope = {:.4}",
                    slope.detector_id, slope.slope
                );
            }
            println!(
                "max pairwise |dP| = {:.3e} (joint 3-sigma band {}), lambda*epsilon spread = {:.3}%",
                report.max_pairwise_deviation,
                if report.within_joint_band { "ok" } else { "EXCEEDED" },
                report.lambda_epsilon_product_spread * 100.0
            );
            if let Some(out) = out {
                let mut csv = String::from("epsilon,detector_id,P,P_oracle,lambda,stderr\n");
                for e in &report.entries {
                    writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        e.epsilon,
                        e.detector_id,
                        e.probability,
                        e.oracle_probability,
                        e.lambda,
                        e.std_error
                    )
                    .expect("string write");
                }
                write_csv(&args, out, "epsilon_scan.csv", &csv)?;
            }
            Ok(serde_json::to_value(&report)?)
        }),
        Command::ScanCoincidence(args) => {
            with_scenario(&args, "scan-coincidence", |resolved, out| {
                let report = coincidence_scan(
                    &resolved.config,
                    &resolved.calibrations,
                    &resolved.windows,
                )?;
                for entry in &report.entries {
                    println!(
                        "C = {:<8} w = {:<10} n_double = {:<8} bound T/2C = {}",
                        entry.calibration, entry.window, entry.n_double, entry.bound
                    );
                }
                println!(
                    "monotone in C at w = {}: {}; max n_double/bound = {:.3}",
                    report.primary_window,
                    report.monotone_in_calibration,
                    report.max_bound_ratio
                );
                if let Some(out) = out {
                    let mut csv = String::from("C,w,n_double,bound_T_over_2C\n");
                    for e in &report.entries {
                        writeln!(csv, "{},{},{},{}", e.calibration, e.window, e.n_double, e.bound)
                            .expect("string write");
                    }
                    write_csv(&args, out, "coincidence_scan.csv", &csv)?;
                }
                Ok(serde_json::to_value(&report)?)
            })
        }
        Command::Ergodicity(args) => with_scenario(&args, "ergodicity", |resolved, out| {
            let cell = resolved.observable_cell;
            let psi = &resolved.config.psi;
            let (label, report) = match resolved.observable {
                ObservableKind::PositionDensity => (
                    format!("position_density[{cell}]"),
                    ergodicity_report(
                        |phi| position_density(phi, cell),
                        psi,
                        &resolved.config.process,
                        resolved.ergodicity_window,
                        resolved.ergodicity_samples,
                    )?,
                ),
                ObservableKind::TotalEnergy => (
                    "total_energy".to_string(),
                    ergodicity_report(
                        |phi| phi.norm_squared(),
                        psi,
                        &resolved.config.process,
                        resolved.ergodicity_window,
                        resolved.ergodicity_samples,
                    )?,
                ),
            };
            println!(
                "{label}: time avg = {:.6} +- {:.2e}, ensemble avg = {:.6} +- {:.2e}, \
                 difference = {:+.3e}, converged = {}",
                report.time_average,
                report.time_std_error,
                report.ensemble_average,
                report.ensemble_std_error,
                report.difference,
                report.converged
            );
            if let Some(out) = out {
                let mut csv = String::from(
                    "functional,window_s,samples,time_average,time_stderr,\
                     ensemble_average,ensemble_stderr,difference,combined_stderr,converged\n",
                );
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    label,
                    report.window,
                    report.samples,
                    report.time_average,
                    report.time_std_error,
                    report.ensemble_average,
                    report.ensemble_std_error,
                    report.difference,
                    report.combined_std_error,
                    report.converged
                )
                .expect("string write");
                write_csv(&args, out, "ergodicity.csv", &csv)?;
            }
            Ok(serde_json::json!({ "functional": label, "report": report }))
        }),
        Command::Presets(args) => run_presets(args),
    }
}

fn run_presets(args: PresetArgs) -> Result<()> {
    match args.name {
        None => {
            println!("available presets:");
            println!("  two_peak         two bumps with Born weights (0.2, 0.8); two detectors");
            println!("  gaussian_packet  single bump, one detector; threshold scans");
            println!("  uniform          flat shape, symmetric detectors; coincidence sweeps");
            Ok(())
        }
        Some(name) => {
            let scenario = Scenario::preset(&name)?;
            let text = serde_json::to_string_pretty(&scenario)?;
            match args.out {
                Some(path) => {
                    std::fs::write(&path, text)?;
                    println!("wrote preset {name:?} to {}", path.display());
                }
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

/// JSON envelope written by every subcommand: the resolved config plus the
/// command's results, stamped with version and seed.
#[derive(Serialize)]
struct Summary<'a> {
    version: &'static str,
    command: &'a str,
    seed: u64,
    threads: usize,
    config: &'a Scenario,
    results: serde_json::Value,
}

fn with_scenario<F>(args: &CommonArgs, command: &str, body: F) -> Result<()>
where
    F: FnOnce(&ResolvedScenario, Option<&Path>) -> Result<serde_json::Value> + Send,
{
    let mut scenario = match (&args.config, &args.preset) {
        (Some(path), None) => Scenario::from_path(path)?,
        (None, Some(name)) => Scenario::preset(name)?,
        (None, None) => {
            return Err(Error::Scenario(
                "provide --config PATH or --preset NAME (see `pcsft presets`)".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if let Some(seed) = args.seed {
        scenario.run.seed = Some(seed);
    }
    let resolved = scenario.resolve()?;

    if let Some(out) = &args.out {
        std::fs::create_dir_all(out)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let results = pool.install(|| body(&resolved, args.out.as_deref()))?;

    if let Some(out) = &args.out {
        if args.format != OutputFormat::Csv {
            let summary = Summary {
                version: env!("CARGO_PKG_VERSION"),
                command,
                seed: resolved.config.process.seed,
                threads: args.threads,
                config: &resolved.echo,
                results,
            };
            let path = out.join("summary.json");
            std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
        }
    }
    Ok(())
}

fn print_run_summary(stats: &RunStatistics) {
    for det in &stats.detectors {
        println!(
            "{}: n = {:<8} P = {:.4} (oracle {:.4})  lambda = {:.4} clicks/s",
            det.id, det.clicks, det.probability, det.oracle_probability, det.frequency
        );
    }
    println!(
        "total clicks = {}, double clicks within w = {}: {}",
        stats.total_clicks, stats.coincidence_window, stats.double_clicks
    );
}

fn write_run_artifacts(
    args: &CommonArgs,
    resolved: &ResolvedScenario,
    stats: &RunStatistics,
    out: &Path,
    summary_name: &str,
) -> Result<()> {
    let mut csv = String::from("detector_id,clicks,lambda,P,P_oracle,stderr\n");
    for det in &stats.detectors {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            det.id,
            det.clicks,
            det.frequency,
            det.probability,
            det.oracle_probability,
            det.probability_std_error
        )
        .expect("string write");
    }
    write_csv(args, out, summary_name, &csv)?;

    if args.click_log {
        let ids: Vec<&str> = match summary_name {
            "basis_summary.csv" => stats.detectors.iter().map(|d| d.id.as_str()).collect(),
            _ => resolved
                .config
                .detectors
                .iter()
                .map(|d| d.id.as_str())
                .collect(),
        };
        let mut log = String::from("detector_id,click_time_s\n");
        for click in &stats.clicks {
            writeln!(log, "{},{}", ids[click.detector], click.time).expect("string write");
        }
        std::fs::write(out.join("clicks.csv"), log)?;
    }
    Ok(())
}

fn write_csv(args: &CommonArgs, out: &Path, name: &str, content: &str) -> Result<()> {
    if args.format != OutputFormat::Json {
        std::fs::write(out.join(name), content)?;
    }
    Ok(())
}
