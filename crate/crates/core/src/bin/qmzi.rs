use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qmzi_core::allocator::{allocation_closed, optimal_r1_numeric, AllocationResult};
use qmzi_core::config::{self, RunConfig};
use qmzi_core::error::{Error, Result};
use qmzi_core::fock::HIGH_CUTOFF;
use qmzi_core::interferometer::{best_sensitivity, SensitivityReport};
use qmzi_core::qcrb::{qfi_phase, Encoding, QfiResult};
use qmzi_core::sweep;
use qmzi_core::validate::{run_validation, ValidateOptions};

/// Phase sensitivity of a lossy squeezed-light Mach-Zehnder interferometer
/// with a variable first beam splitter.
#[derive(Parser)]
#[command(name = "qmzi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (key = value lines or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in configuration; a --config file overrides its keys.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output file, or - for standard output.
    #[arg(long, global = true, default_value = "-")]
    out: String,
    /// Output format. Defaults to CSV for sweeps, JSON for optimize and
    /// readable text otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Phase sensitivity of one configuration.
    Sensitivity,
    /// Table over one parameter axis.
    Sweep,
    /// Optimal first-splitter reflectivity.
    Optimize,
    /// Quantum Fisher information and Cramér-Rao bound.
    Qcrb {
        #[arg(long, value_enum, default_value = "reference-free")]
        encoding: EncodingArg,
    },
    /// Run the built-in consistency checks.
    Validate {
        /// Per-mode cutoff of the Fock-space oracle.
        #[arg(long, default_value_t = HIGH_CUTOFF)]
        fock_cutoff: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    ReferenceFree,
    Differential,
    ArmAOnly,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::ReferenceFree => Encoding::ReferenceFree,
            EncodingArg::Differential => Encoding::Differential,
            EncodingArg::ArmAOnly => Encoding::ArmAOnly,
        }
    }
}

enum Failure {
    Error(Error),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(Error::Config(format!("cannot write output: {e}")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(name)) => {
            eprintln!("validation failed: {name}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("qmzi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn open_output(path: &str) -> Result<Box<dyn Write>, Failure> {
    if path == "-" {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let file = File::create(path).map_err(|e| Error::Config(format!("cannot create {path}: {e}")))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn load(cli: &Cli) -> Result<RunConfig> {
    config::load(cli.config.as_deref(), cli.preset.as_deref())
}

fn json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(0) = cli.threads {
        return Err(Error::Config("--threads must be at least 1".into()).into());
    }
    match &cli.command {
        Command::Sensitivity => {
            let report = best_sensitivity(&load(cli)?.base)?;
            let mut out = open_output(&cli.out)?;
            match cli.format.unwrap_or(Format::Text) {
                Format::Json => json(&report, &mut out)?,
                Format::Csv => {
                    writeln!(out, "delta_phi,signal_slope,noise,db_vs_sql,method")?;
                    writeln!(
                        out,
                        "{:.8e},{:.8e},{:.8e},{:.3},{}",
                        report.delta_phi,
                        report.signal_slope,
                        report.noise,
                        report.db_vs_sql,
                        method_name(&report)
                    )?;
                }
                Format::Text => write_sensitivity_text(&report, &mut out)?,
            }
            out.flush()?;
        }
        Command::Sweep => {
            let spec = load(cli)?.sweep.ok_or_else(|| Error::Config("sweep needs an 'axis' in the configuration".into()))?;
            let rows = match cli.threads {
                Some(n) => sweep::run_with_threads(&spec, n)?,
                None => sweep::run(&spec)?,
            };
            let mut out = open_output(&cli.out)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Json => sweep::write_json(&spec, &rows, &mut out)?,
                Format::Csv | Format::Text => sweep::write_csv(&rows, &mut out)?,
            }
            out.flush()?;
        }
        Command::Optimize => {
            let base = load(cli)?.base;
            let closed = match allocation_closed(&base) {
                Ok(a) => Some(a),
                Err(Error::OutOfValidity(_)) => None,
                Err(e) => return Err(e.into()),
            };
            let numeric = optimal_r1_numeric(&base)?;
            let result = Optimization { closed_form: closed, numeric };
            let mut out = open_output(&cli.out)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => json(&result, &mut out)?,
                Format::Csv => {
                    writeln!(out, "method,r1_opt,delta_phi_opt,delta_phi_half,improvement_db")?;
                    for a in closed.iter().chain([&numeric]) {
                        writeln!(
                            out,
                            "{},{:.8e},{:.8e},{:.8e},{:.3}",
                            serde_json::to_value(a.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                            a.r1_opt,
                            a.delta_phi_opt,
                            a.delta_phi_half,
                            a.improvement_db
                        )?;
                    }
                }
                Format::Text => {
                    for a in closed.iter().chain([&numeric]) {
                        writeln!(
                            out,
                            "{:<14} R1 = {:.6}  delta_phi = {:.8e} rad  ({:.3} dB better than R1 = 0.5)",
                            format!("{:?}", a.method),
                            a.r1_opt,
                            a.delta_phi_opt,
                            a.improvement_db
                        )?;
                    }
                }
            }
            out.flush()?;
        }
        Command::Qcrb { encoding } => {
            let base = load(cli)?.base;
            let qfi = qfi_phase(&base, (*encoding).into())?;
            let detected = best_sensitivity(&base).ok();
            let report = Bound {
                ratio: match (detected, qfi.qcrb) {
                    (Some(d), Some(b)) => Some(d.delta_phi / b),
                    _ => None,
                },
                delta_phi: detected.map(|d| d.delta_phi),
                qfi,
            };
            let mut out = open_output(&cli.out)?;
            match cli.format.unwrap_or(Format::Text) {
                Format::Json => json(&report, &mut out)?,
                Format::Csv => {
                    writeln!(out, "qfi,qcrb,delta_phi,ratio,residual")?;
                    let cell = |v: Option<f64>| v.map(|x| format!("{x:.8e}")).unwrap_or_default();
                    writeln!(
                        out,
                        "{:.8e},{},{},{},{:.2e}",
                        report.qfi.qfi,
                        cell(report.qfi.qcrb),
                        cell(report.delta_phi),
                        cell(report.ratio),
                        report.qfi.residual
                    )?;
                }
                Format::Text => {
                    writeln!(out, "encoding   {:?}", report.qfi.encoding)?;
                    writeln!(out, "qfi        {:.8e}", report.qfi.qfi)?;
                    match report.qfi.qcrb {
                        Some(b) => writeln!(out, "qcrb       {b:.8e} rad")?,
                        None => writeln!(out, "qcrb       unbounded (zero QFI)")?,
                    }
                    if let Some(d) = report.delta_phi {
                        writeln!(out, "delta_phi  {d:.8e} rad")?;
                    }
                    if let Some(r) = report.ratio {
                        writeln!(out, "ratio      {r:.6}")?;
                    }
                }
            }
            out.flush()?;
        }
        Command::Validate { fock_cutoff } => {
            let mut out = open_output(&cli.out)?;
            let report = run_validation(&ValidateOptions { fock_cutoff: *fock_cutoff, ..Default::default() });
            match cli.format.unwrap_or(Format::Text) {
                Format::Json => json(&report, &mut out)?,
                Format::Csv => {
                    writeln!(out, "check,passed,detail")?;
                    for c in &report.checks {
                        writeln!(out, "\"{}\",{},\"{}\"", c.name.replace('"', "'"), c.passed, c.detail.replace('"', "'"))?;
                    }
                }
                Format::Text => {
                    for c in &report.checks {
                        writeln!(out, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
                    }
                    let failed = report.checks.iter().filter(|c| !c.passed).count();
                    writeln!(out, "{} checks, {} failed", report.checks.len(), failed)?;
                }
            }
            out.flush()?;
            if let Some(first) = report.first_failure() {
                return Err(Failure::Validation(format!("{} ({})", first.name, first.detail)));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Optimization {
    closed_form: Option<AllocationResult>,
    numeric: AllocationResult,
}

#[derive(Serialize)]
struct Bound {
    #[serde(flatten)]
    qfi: QfiResult,
    delta_phi: Option<f64>,
    ratio: Option<f64>,
}

fn method_name(report: &SensitivityReport) -> String {
    serde_json::to_value(report.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn write_sensitivity_text(report: &SensitivityReport, out: &mut dyn Write) -> io::Result<()> {
    let side = if report.db_vs_sql >= 0.0 { "below" } else { "above" };
    writeln!(out, "delta_phi     {:.8e} rad", report.delta_phi)?;
    writeln!(out, "signal_slope  {:.8e}", report.signal_slope)?;
    writeln!(out, "noise         {:.8e}", report.noise)?;
    writeln!(out, "method        {}", method_name(report))?;
    writeln!(out, "{:.2} dB {side} SQL", report.db_vs_sql.abs())
}
