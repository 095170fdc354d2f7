//! `bcast` command-line front end.

pub mod config;
pub mod error;
pub mod output;
pub mod plots;
pub mod report;
pub mod trace_csv;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use bcast_core::analysis::{default_storage_weights, passivity_check, tracking_metrics};
use bcast_core::lti::{spr_test, SprCertificate, SprVerdict, TransferFunction};
use bcast_core::simulator::{simulate, Preset, SimConfig};

use crate::config::{load_config, ConfigFile};
use crate::error::CliError;
use crate::output::OutputFile;
use crate::report::{PassivitySummary, RunIdentity, RunReport};

#[derive(Debug, Parser)]
#[command(name = "bcast", version, about = "Broadcast-error multi-agent tracking simulator")]
pub struct Cli {
    /// Override the integration step of every run [s].
    #[arg(long, global = true)]
    pub dt: Option<f64>,

    /// Accept plants that fail the strict positive-real test.
    #[arg(long, global = true)]
    pub allow_non_spr: bool,

    /// Number of runs executed concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one or more JSON configs.
    Simulate {
        /// Config file; repeat for a batch (each run goes to OUT/<file stem>).
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run built-in experiments: asc-cond1, asc-cond2, assc-cond1, integral-cond1, or `all`.
    Preset {
        #[arg(required = true, num_args = 1..)]
        names: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Strict positive-real test of num(s)/den(s).
    Spr {
        /// Numerator coefficients, highest power first.
        #[arg(long, required = true, num_args = 1.., allow_negative_numbers = true)]
        num: Vec<f64>,
        /// Denominator coefficients, highest power first.
        #[arg(long, required = true, num_args = 1.., allow_negative_numbers = true)]
        den: Vec<f64>,
        /// Print the certificate as JSON.
        #[arg(long)]
        json: bool,
    },
}

/// A run's outcome: the report always exists once the files are written;
/// `failure` carries an analysis failure detected after writing.
pub struct RunOutcome {
    pub report: RunReport,
    pub dir: PathBuf,
    pub failure: Option<String>,
}

/// Simulates, analyses and writes every output file into `dir`.
pub fn execute_run(
    config: &SimConfig,
    run: RunIdentity,
    dir: &Path,
    write_config: bool,
) -> Result<RunOutcome, CliError> {
    let trace = simulate(config)?;
    let spr = spr_test(&config.plant);

    let mut tracking = Vec::new();
    for (a, b) in report::tracking_windows(config) {
        tracking.push(tracking_metrics(&trace, a, b)?);
    }
    let mut flags = Vec::new();
    let mut failure = None;
    let passivity = if config.analysis.passivity {
        let rep = passivity_check(&trace, config, &default_storage_weights(config), config.analysis.tol)?;
        if !rep.passive {
            let msg = format!(
                "dissipation margin {:.3e} exceeds tol {:.3e}",
                rep.max_violation, rep.tol
            );
            flags.push(msg.clone());
            failure = Some(msg);
        }
        Some(PassivitySummary::new(&rep, &trace))
    } else {
        None
    };
    for seg in report::unreached_segments(config, &trace) {
        flags.push(format!("reference not reached in segment {seg}"));
    }
    let fault_checks = report::fault_checks(config, &trace);
    for c in fault_checks.iter().filter(|c| !c.outputs_zero) {
        let msg = format!("faulted agents {:?} produced nonzero output after t={}", c.agents, c.t);
        flags.push(msg.clone());
        failure.get_or_insert(msg);
    }

    let config_file = ConfigFile::from_sim_config(config)?;
    let plots = plots::all_plots(&trace)?;
    let mut names = vec!["trace.csv".to_string(), "report.json".to_string()];
    names.extend(plots.iter().map(|(n, _)| n.to_string()));
    if write_config {
        names.push("config.json".into());
    }

    let report = RunReport {
        schema_version: report::SCHEMA_VERSION,
        run,
        config: config_file.clone(),
        spr,
        rows: trace.len(),
        tracking,
        passivity,
        fault_checks,
        flags,
        files: names,
    };

    let mut csv = Vec::new();
    trace_csv::write_trace(&trace, &mut csv)?;
    let mut files = vec![
        OutputFile::new("trace.csv", csv),
        OutputFile::new("report.json", report.to_json()),
    ];
    files.extend(plots.into_iter().map(|(n, svg)| OutputFile::new(n, svg)));
    if write_config {
        let mut text = config_file.to_json();
        text.push('\n');
        files.push(OutputFile::new("config.json", text));
    }
    output::write_all(dir, &files)?;
    Ok(RunOutcome {
        report,
        dir: dir.to_path_buf(),
        failure,
    })
}

pub fn cmd_simulate(path: &Path, out: &Path, dt: Option<f64>, allow_non_spr: bool) -> Result<RunOutcome, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config = load_config(&text, dt, allow_non_spr)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "config".into());
    let run = RunIdentity {
        source: "config",
        name,
        config_path: Some(path.display().to_string()),
    };
    execute_run(&config, run, out, false)
}

pub fn preset_config(name: &str, dt: Option<f64>) -> Result<SimConfig, CliError> {
    let preset: Preset = name.parse()?;
    let mut config = preset.config();
    if let Some(dt) = dt {
        config.dt = dt;
        config.validate()?;
    }
    Ok(config)
}

pub fn cmd_preset(name: &str, out: &Path, dt: Option<f64>) -> Result<RunOutcome, CliError> {
    let config = preset_config(name, dt)?;
    let run = RunIdentity {
        source: "preset",
        name: name.to_string(),
        config_path: None,
    };
    execute_run(&config, run, out, true)
}

pub use bcast_core::poly::format_ascending as format_realpart;

pub fn cmd_spr(num: &[f64], den: &[f64]) -> Result<SprCertificate, CliError> {
    let tf = TransferFunction::new(num, den)?;
    Ok(spr_test(&tf))
}

fn summary_line(o: &RunOutcome) -> String {
    let windows: Vec<String> = o
        .report
        .tracking
        .iter()
        .map(|m| format!("mean y_p[{:.3},{:.3}]={:.4}", m.window[0], m.window[1], m.mean_yp))
        .collect();
    let mut line = format!(
        "{}: {} rows -> {} ({})",
        o.report.run.name,
        o.report.rows,
        o.dir.display(),
        windows.join(", ")
    );
    if let Some(p) = &o.report.passivity {
        line.push_str(&format!("; dissipation margin {:.3e}, C_u {}", p.max_violation, p.c_u));
    }
    for f in &o.report.flags {
        line.push_str(&format!("; {f}"));
    }
    line
}

fn batch<T: Sync>(
    items: &[T],
    out: &Path,
    jobs: usize,
    name: impl Fn(&T) -> String + Sync,
    run: impl Fn(&T, &Path) -> Result<RunOutcome, CliError> + Sync,
) -> Result<Vec<Result<RunOutcome, CliError>>, CliError> {
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let single = items.len() == 1;
    let dir_for = |item: &T| if single { out.to_path_buf() } else { out.join(name(item)) };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(|it| run(it, &dir_for(it))).collect()))
}

fn report_outcomes(results: Vec<Result<RunOutcome, CliError>>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut code = 0;
    for r in results {
        match r {
            Ok(o) => {
                let _ = writeln!(out, "{}", summary_line(&o));
                if let Some(f) = &o.failure {
                    let _ = writeln!(err, "error: {}: {f}", o.report.run.name);
                    code = code.max(2);
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                code = code.max(e.exit_code());
            }
        }
    }
    code
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate { config, out: dir } => {
            let stem = |p: &PathBuf| {
                p.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "config".into())
            };
            let mut stems: Vec<String> = config.iter().map(stem).collect();
            stems.sort();
            if stems.windows(2).any(|w| w[0] == w[1]) {
                return Err(CliError::Usage("batch configs must have distinct file names".into()));
            }
            let results = batch(&config, &dir, cli.jobs, stem, |p, d| {
                cmd_simulate(p, d, cli.dt, cli.allow_non_spr)
            })?;
            Ok(report_outcomes(results, out, err))
        }
        Command::Preset { names, out: dir } => {
            let mut names: Vec<String> = if names.iter().any(|n| n == "all") {
                Preset::ALL.iter().map(|p| p.name().to_string()).collect()
            } else {
                names
            };
            names.dedup();
            for n in &names {
                n.parse::<Preset>()?;
            }
            let results = batch(&names, &dir, cli.jobs, |n| n.clone(), |n, d| cmd_preset(n, d, cli.dt))?;
            Ok(report_outcomes(results, out, err))
        }
        Command::Spr { num, den, json } => {
            let cert = cmd_spr(&num, &den)?;
            if json {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&cert).expect("serializes"));
            } else {
                let _ = writeln!(out, "hurwitz: {}", cert.hurwitz);
                let _ = writeln!(out, "p(x) = {}  (x = omega^2)", format_realpart(&cert.realpart_poly));
                match cert.relative_degree {
                    Some(r) => {
                        let _ = writeln!(out, "relative degree: {r}");
                    }
                    None => {
                        let _ = writeln!(out, "relative degree: undefined (zero numerator)");
                    }
                }
                let _ = writeln!(out, "verdict: {}", cert.verdict);
                if let Some(r) = &cert.reason {
                    let _ = writeln!(out, "reason: {r}");
                }
            }
            Ok(if cert.verdict == SprVerdict::StrictlyPositiveReal { 0 } else { 2 })
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
