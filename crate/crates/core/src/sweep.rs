//! One-dimensional parameter sweeps emitted as CSV or JSON tables.
//!
//! Rows are evaluated in parallel and emitted in (series, axis) order, so the
//! output bytes depend only on the spec.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocator::{optimal_r1_closed, optimal_r1_numeric};
use crate::error::{Error, Result};
use crate::interferometer::{
    closed_form_report, db_to_xi, db_vs_sql, mzi_5050_reference, optimization_ratio, simulate_sensitivity,
    InterferometerConfig, SensitivityReport,
};
use crate::qcrb::{qfi_phase, Encoding};

pub const MAX_POINTS: usize = 1_000_000;

pub const CSV_COLUMNS: [&str; 11] = [
    "series",
    "axis",
    "delta_phi_closed",
    "delta_phi_engine",
    "qcrb",
    "db_vs_sql",
    "r1_opt",
    "or_db",
    "signal",
    "noise",
    "flags",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    R1,
    LossA,
    SqueezeDb,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "r1" => Ok(Axis::R1),
            "loss_a" => Ok(Axis::LossA),
            "squeeze_db" => Ok(Axis::SqueezeDb),
            _ => Err(Error::config(format!("unknown axis '{s}' (r1, loss_a, squeeze_db)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    ClosedForm,
    Engine,
    Qcrb,
    Sql,
    OptimalR1,
    OrMetric,
    /// Signal for the configured probe shift and the noise standard deviation.
    SignalNoise,
}

impl Output {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "closed_form" => Output::ClosedForm,
            "engine" => Output::Engine,
            "qcrb" => Output::Qcrb,
            "sql" => Output::Sql,
            "optimal_r1" => Output::OptimalR1,
            "or_metric" => Output::OrMetric,
            "signal_noise" => Output::SignalNoise,
            _ => {
                return Err(Error::config(format!(
                    "unknown output '{s}' (closed_form, engine, qcrb, sql, optimal_r1, or_metric, signal_noise)"
                )))
            }
        })
    }
}

/// Baseline of the `or_db` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Classical 50:50 interferometer with the same N and losses.
    Mzi5050,
    /// `1/√N`.
    Sql,
}

impl Reference {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mzi_5050" => Ok(Reference::Mzi5050),
            "sql" => Ok(Reference::Sql),
            _ => Err(Error::config(format!("unknown reference '{s}' (mzi_5050, sql)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R1Choice {
    Fixed(f64),
    /// Optimal R1 at every point: closed form where it applies, numeric otherwise.
    Optimal,
}

/// One curve of a sweep: overrides applied to the base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub squeeze_xi: Option<f64>,
    pub r1: Option<R1Choice>,
    pub loss_a: Option<f64>,
    pub loss_b: Option<f64>,
}

impl Series {
    pub fn named(name: &str) -> Self {
        Self { name: name.to_string(), squeeze_xi: None, r1: None, loss_a: None, loss_b: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: InterferometerConfig,
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub outputs: Vec<Output>,
    pub reference: Reference,
    pub series: Vec<Series>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::config(format!("sweep range needs start < stop, got [{}, {}]", self.start, self.stop)));
        }
        if !(2..=MAX_POINTS).contains(&self.points) {
            return Err(Error::config(format!("points must lie in [2, {MAX_POINTS}], got {}", self.points)));
        }
        if self.outputs.is_empty() {
            return Err(Error::config("no outputs requested"));
        }
        for s in &self.series {
            let clash = match self.axis {
                Axis::R1 => s.r1.is_some(),
                Axis::LossA => s.loss_a.is_some(),
                Axis::SqueezeDb => s.squeeze_xi.is_some(),
            };
            if clash {
                return Err(Error::config(format!("series '{}' overrides the swept parameter", s.name)));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| if k + 1 == self.points { self.stop } else { self.start + (self.stop - self.start) * k as f64 / last })
            .collect()
    }

    fn wants(&self, output: Output) -> bool {
        self.outputs.contains(&output)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub series: String,
    pub axis: f64,
    pub delta_phi_closed: Option<f64>,
    pub delta_phi_engine: Option<f64>,
    pub qcrb: Option<f64>,
    pub db_vs_sql: Option<f64>,
    pub r1_opt: Option<f64>,
    pub or_db: Option<f64>,
    pub signal: Option<f64>,
    pub noise: Option<f64>,
    /// Per-row conditions; a flagged row never aborts the sweep.
    pub flags: Vec<String>,
}

pub fn flag(error: &Error) -> String {
    match error {
        Error::Divergent { parameter, .. } => format!("divergent_{parameter}"),
        Error::OutOfValidity(_) => "out_of_validity".into(),
        Error::UndefinedSensitivity { .. } => "undefined_sensitivity".into(),
        Error::Precision(_) => "precision".into(),
        Error::Domain(_) => "domain".into(),
        _ => "error".into(),
    }
}

/// R1 minimizing δφ: closed form inside its domain, engine search otherwise.
pub fn optimal_r1(cfg: &InterferometerConfig) -> Result<f64> {
    match cfg.check_closed_form_domain() {
        Ok(()) => optimal_r1_closed(cfg.loss_a, cfg.squeeze_xi),
        Err(Error::OutOfValidity(_)) => Ok(optimal_r1_numeric(cfg)?.r1_opt),
        Err(e) => Err(e),
    }
}

fn evaluate(spec: &SweepSpec, series: &Series, x: f64) -> SweepRow {
    let mut row = SweepRow {
        series: series.name.clone(),
        axis: x,
        delta_phi_closed: None,
        delta_phi_engine: None,
        qcrb: None,
        db_vs_sql: None,
        r1_opt: None,
        or_db: None,
        signal: None,
        noise: None,
        flags: Vec::new(),
    };
    let note = |row: &mut SweepRow, e: &Error| {
        let f = flag(e);
        if !row.flags.contains(&f) {
            row.flags.push(f);
        }
    };

    let mut cfg = spec.base;
    if let Some(xi) = series.squeeze_xi {
        cfg.squeeze_xi = xi;
    }
    if let Some(l) = series.loss_a {
        cfg.loss_a = l;
    }
    if let Some(l) = series.loss_b {
        cfg.loss_b = l;
    }
    if let Some(R1Choice::Fixed(r)) = series.r1 {
        cfg.r1 = r;
    }
    match spec.axis {
        Axis::R1 => cfg.r1 = x,
        Axis::LossA => cfg.loss_a = x,
        Axis::SqueezeDb => cfg.squeeze_xi = db_to_xi(x),
    }

    let optimal = series.r1 == Some(R1Choice::Optimal);
    if optimal || spec.wants(Output::OptimalR1) {
        match optimal_r1(&cfg) {
            Ok(r) => {
                if spec.wants(Output::OptimalR1) {
                    row.r1_opt = Some(r);
                }
                if optimal {
                    cfg.r1 = r;
                }
            }
            Err(e) => {
                note(&mut row, &e);
                if optimal {
                    return row;
                }
            }
        }
    }

    let mut closed: Option<SensitivityReport> = None;
    let mut engine: Option<SensitivityReport> = None;
    let needs_primary = spec.wants(Output::Sql) || spec.wants(Output::OrMetric) || spec.wants(Output::SignalNoise);
    if spec.wants(Output::ClosedForm) || needs_primary {
        match closed_form_report(&cfg) {
            Ok(r) => closed = Some(r),
            Err(e) => note(&mut row, &e),
        }
    }
    if spec.wants(Output::Engine) || (needs_primary && closed.is_none() && row.flags.iter().all(|f| f == "out_of_validity")) {
        match simulate_sensitivity(&cfg) {
            Ok(r) => engine = Some(r),
            Err(e) => note(&mut row, &e),
        }
    }
    if spec.wants(Output::ClosedForm) {
        row.delta_phi_closed = closed.map(|r| r.delta_phi);
    }
    if spec.wants(Output::Engine) {
        row.delta_phi_engine = engine.map(|r| r.delta_phi);
    }
    let primary = closed.or(engine);
    if let Some(p) = primary {
        if spec.wants(Output::SignalNoise) {
            row.signal = Some(p.signal_slope.abs() * cfg.delta_phi);
            row.noise = Some(p.noise);
        }
        if spec.wants(Output::Sql) {
            row.db_vs_sql = db_vs_sql(p.delta_phi, cfg.n_photons).ok();
        }
        if spec.wants(Output::OrMetric) {
            let reference = match spec.reference {
                Reference::Mzi5050 => mzi_5050_reference(&cfg),
                Reference::Sql => Ok(1.0 / cfg.n_photons.sqrt()),
            };
            match reference.and_then(|r| optimization_ratio(p.delta_phi, r)) {
                Ok(v) => row.or_db = Some(v),
                Err(e) => note(&mut row, &e),
            }
        }
    }
    if spec.wants(Output::Qcrb) {
        match qfi_phase(&cfg, Encoding::ReferenceFree) {
            Ok(q) => row.qcrb = q.qcrb,
            Err(e) => note(&mut row, &e),
        }
    }
    row
}

/// Evaluates every (series, point) pair on the current rayon pool.
pub fn run(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grid = spec.grid();
    let tasks: Vec<(&Series, f64)> = spec.series.iter().flat_map(|s| grid.iter().map(move |&x| (s, x))).collect();
    Ok(tasks.par_iter().map(|&(s, x)| evaluate(spec, s, x)).collect())
}

/// [`run`] on a dedicated pool of `threads` workers.
pub fn run_with_threads(spec: &SweepSpec, threads: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| run(spec))
}

fn number(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.8e}")).unwrap_or_default()
}

fn decibels(v: Option<f64>) -> String {
    match v {
        Some(x) => {
            let s = format!("{x:.3}");
            if s == "-0.000" {
                "0.000".into()
            } else {
                s
            }
        }
        None => String::new(),
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.series,
            number(Some(r.axis)),
            number(r.delta_phi_closed),
            number(r.delta_phi_engine),
            number(r.qcrb),
            decibels(r.db_vs_sql),
            number(r.r1_opt),
            decibels(r.or_db),
            number(r.signal),
            number(r.noise),
            r.flags.join(";")
        )?;
    }
    Ok(())
}

/// Rounds to nine significant digits (three decimals for dB values) so JSON
/// and CSV carry the same numbers.
fn rounded(row: &SweepRow) -> SweepRow {
    let sig = |v: Option<f64>| v.map(|x| format!("{x:.8e}").parse::<f64>().unwrap_or(x));
    let db = |v: Option<f64>| v.map(|x| format!("{x:.3}").parse::<f64>().unwrap_or(x) + 0.0);
    SweepRow {
        series: row.series.clone(),
        axis: sig(Some(row.axis)).unwrap_or(row.axis),
        delta_phi_closed: sig(row.delta_phi_closed),
        delta_phi_engine: sig(row.delta_phi_engine),
        qcrb: sig(row.qcrb),
        db_vs_sql: db(row.db_vs_sql),
        r1_opt: sig(row.r1_opt),
        or_db: db(row.or_db),
        signal: sig(row.signal),
        noise: sig(row.noise),
        flags: row.flags.clone(),
    }
}

#[derive(Serialize)]
struct JsonSweep<'a> {
    axis: Axis,
    reference: Reference,
    outputs: &'a [Output],
    rows: Vec<SweepRow>,
}

pub fn write_json<W: Write>(spec: &SweepSpec, rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    let doc = JsonSweep {
        axis: spec.axis,
        reference: spec.reference,
        outputs: &spec.outputs,
        rows: rows.iter().map(rounded).collect(),
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)
}
