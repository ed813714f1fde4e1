//! Config-driven runs: parse, simulate, write CSV/JSON, check expectations.
//!
//! Exit codes: 0 success, 1 configuration or output error, 2 solver failure,
//! 3 an `expect.*` check failed.

mod config;

use std::{
    collections::{ BTreeMap, BTreeSet },
    fmt::Write as _,
    fs,
    path::{ Path, PathBuf },
    time::{ SystemTime, UNIX_EPOCH },
};

use rayon::prelude::*;
use serde_json::{ json, Value };

pub use config::{
    external_quantity, key_unit, parse_config, quantity, Check, CheckKind, ConfigError, Experiment, RunConfig, SweepSpec,
    Unit,
};

use crate::{
    dynamics::SimResult,
    physmodel::DerivedReport,
    protocols::{
        build_cooling_protocol, build_fock_protocol, build_noon_protocol, build_superposition_protocol, explain,
        run_protocol, ProtocolError, ProtocolRun, ProtocolScript,
    },
};

pub const THREADS_ENV: &str = "RYDMECH_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid setup: {0}")]
    Setup(ProtocolError),
    #[error("solver failure: {0}")]
    Solver(ProtocolError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("sweep point {param} = {value}: {source}")]
    SweepPoint { param: String, value: String, source: Box<CliError> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Setup(_) | Self::Io { .. } => 1,
            Self::Solver(_) => 2,
            Self::SweepPoint { source, .. } => source.exit_code(),
        }
    }
}

fn classify(e: ProtocolError) -> CliError {
    match e {
        ProtocolError::Dynamics(_) => CliError::Solver(e),
        _ => CliError::Setup(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub metric: String,
    pub expected: String,
    pub actual: Option<f64>,
    pub pass: bool,
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub experiment: Experiment,
    pub derived: Option<DerivedReport>,
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub checks: Vec<CheckResult>,
    /// Header and rows of the CSV output.
    pub table: (Vec<String>, Vec<Vec<Option<f64>>>),
    pub json: Value,
}

impl RunReport {
    pub fn checks_passed(&self) -> bool { self.checks.iter().all(|c| c.pass) }

    pub fn exit_code(&self) -> i32 {
        if self.checks_passed() { 0 } else { 3 }
    }

    /// Human-readable summary for stdout.
    pub fn summary_text(&self) -> String {
        let mut out = format!("experiment: {}\n", self.experiment.name());
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        if let Some(d) = &self.derived {
            for (name, value, unit) in d.rows() {
                let _ = writeln!(out, "  {name:<36} {value:>14.6e} {unit}");
            }
        }
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "  {k:<36} {v:>14.6e}");
        }
        for c in &self.checks {
            let actual = c.actual.map_or("missing".to_string(), |a| format!("{a:.6e}"));
            let _ = writeln!(
                out,
                "{} {} expected {} got {actual}",
                if c.pass { "PASS" } else { "FAIL" },
                c.metric,
                c.expected
            );
        }
        out
    }
}

/// Builds the protocol script of a simulation experiment.
pub fn build_script(cfg: &RunConfig, experiment: Experiment) -> Result<ProtocolScript, CliError> {
    let (p, o) = (&cfg.params, &cfg.protocol);
    match experiment {
        Experiment::Cool => build_cooling_protocol(p, o),
        Experiment::Fock => build_fock_protocol(cfg.m_target, p, o),
        Experiment::Superpose => build_superposition_protocol(p, o),
        Experiment::Noon => build_noon_protocol(p, o),
        Experiment::Params | Experiment::Sweep => unreachable!("not a simulation experiment"),
    }
    .map_err(classify)
}

/// Segment table (or parameter report) without running anything.
pub fn explain_config(cfg: &RunConfig) -> Result<String, CliError> {
    match cfg.experiment {
        Experiment::Params => {
            let mut out = String::new();
            for (name, value, unit) in cfg.params.report().map_err(|e| CliError::Setup(e.into()))?.rows() {
                let _ = writeln!(out, "{name:<36} {value:>14.6e} {unit}");
            }
            Ok(out)
        }
        Experiment::Sweep => {
            let sweep = cfg.sweep.as_ref().expect("validated sweep");
            let mut out = format!("sweep of {} over {} over {:?}\n", sweep.experiment.name(), sweep.param, sweep.values);
            for v in &sweep.values {
                let point = sweep_point(cfg, sweep, v)?;
                let _ = writeln!(out, "\n[{} = {v}]", sweep.param);
                out.push_str(&explain(&build_script(&point, sweep.experiment)?));
            }
            Ok(out)
        }
        e => Ok(explain(&build_script(cfg, e)?)),
    }
}

fn summary_metrics(run: &ProtocolRun) -> BTreeMap<String, f64> {
    let s = &run.summary;
    let mut m = s.metrics.clone();
    m.insert("total_time_s".into(), s.total_time_s);
    if let Some(f) = s.fidelity {
        m.insert("fidelity".into(), f);
    }
    let single = s.p0.len() == 1;
    for (k, p0) in s.p0.iter().enumerate() {
        let sfx = if single { String::new() } else { format!("_mode{}", k + 1) };
        m.insert(format!("p0{sfx}"), *p0);
        if let Some(Some(t)) = s.t_eff_k.get(k) {
            m.insert(format!("t_eff_k{sfx}"), *t);
        }
    }
    m
}

fn series_table(res: &SimResult) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut header = vec!["time_s".to_string()];
    header.extend(res.columns.iter().cloned());
    let rows = res
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| std::iter::once(Some(t)).chain(res.series.iter().map(|s| Some(s[k]))).collect())
        .collect();
    (header, rows)
}

fn evaluate_checks(checks: &[Check], metrics: &BTreeMap<String, f64>) -> Vec<CheckResult> {
    checks
        .iter()
        .map(|c| {
            let actual = metrics.get(&c.metric).copied();
            CheckResult {
                metric: c.metric.clone(),
                expected: c.text.clone(),
                actual,
                pass: actual.is_some_and(|a| c.kind.holds(a)),
            }
        })
        .collect()
}

fn sweep_point(cfg: &RunConfig, sweep: &SweepSpec, value: &str) -> Result<RunConfig, CliError> {
    let mut point = cfg.clone();
    point.experiment = sweep.experiment;
    point.set(&sweep.param, value).map_err(|message| ConfigError { line: 0, message })?;
    Ok(point)
}

fn simulate(cfg: &RunConfig, experiment: Experiment) -> Result<(ProtocolScript, ProtocolRun), CliError> {
    let script = build_script(cfg, experiment)?;
    let run = run_protocol(&script, &cfg.solver).map_err(classify)?;
    Ok((script, run))
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| ConfigError {
            line: 0,
            message: format!("{THREADS_ENV} must be a positive integer, got `{v}`"),
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| ConfigError { line: 0, message: format!("thread pool: {e}") }.into())
}

/// Runs the configured experiment without touching the filesystem.
pub fn run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let derived = cfg.params.report().ok();
    let mut warnings = Vec::new();
    let (metrics, table, extra) = match cfg.experiment {
        Experiment::Params => {
            let d = cfg.params.report().map_err(|e| CliError::Setup(e.into()))?;
            let metrics: BTreeMap<String, f64> = match serde_json::to_value(&d) {
                Ok(Value::Object(map)) => map.into_iter().filter_map(|(k, v)| v.as_f64().map(|x| (k, x))).collect(),
                _ => BTreeMap::new(),
            };
            let header = vec!["quantity".to_string(), "value".to_string()];
            (metrics, (header, Vec::new()), Value::Null)
        }
        Experiment::Sweep => {
            let sweep = cfg.sweep.as_ref().expect("validated sweep");
            let points: Vec<RunConfig> =
                sweep.values.iter().map(|v| sweep_point(cfg, sweep, v)).collect::<Result<_, _>>()?;
            let pool = thread_pool()?;
            let outcomes: Vec<Result<BTreeMap<String, f64>, CliError>> = pool.install(|| {
                points
                    .par_iter()
                    .zip(sweep.values.par_iter())
                    .map(|(p, v)| {
                        simulate(p, sweep.experiment).map(|(_, run)| summary_metrics(&run)).map_err(|e| {
                            CliError::SweepPoint { param: sweep.param.clone(), value: v.clone(), source: Box::new(e) }
                        })
                    })
                    .collect()
            });
            let rows: Vec<BTreeMap<String, f64>> = outcomes.into_iter().collect::<Result<_, _>>()?;
            let names: BTreeSet<&String> = rows.iter().flat_map(|r| r.keys()).collect();
            let mut header = vec![sweep.param.clone()];
            header.extend(names.iter().map(|s| s.to_string()));
            let unit = key_unit(&sweep.param);
            let table_rows = sweep
                .values
                .iter()
                .zip(&rows)
                .map(|(v, r)| {
                    std::iter::once(external_quantity(v, unit).ok())
                        .chain(names.iter().map(|n| r.get(*n).copied()))
                        .collect()
                })
                .collect();
            let points_json: Vec<Value> = sweep
                .values
                .iter()
                .zip(&rows)
                .map(|(v, r)| json!({ "value": v, "metrics": r }))
                .collect();
            (BTreeMap::new(), (header, table_rows), json!({ "param": sweep.param, "points": points_json }))
        }
        e => {
            let (script, run) = simulate(cfg, e)?;
            warnings.extend(script.warnings.iter().cloned());
            let d = &run.result.diagnostics;
            let solver = json!({
                "accepted_steps": d.steps.accepted,
                "rejected_steps": d.steps.rejected,
                "rhs_evals": d.steps.rhs_evals,
                "support_size": d.support_size,
                "max_trace_drift": d.max_trace_drift,
                "final_hermiticity_error": d.final_hermiticity_error,
                "final_min_eigenvalue": d.final_min_eigenvalue,
            });
            (summary_metrics(&run), series_table(&run.result), solver)
        }
    };
    let checks = evaluate_checks(&cfg.checks, &metrics);
    let input: serde_json::Map<String, Value> =
        cfg.entries.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    let mut doc = json!({
        "experiment": cfg.experiment.name(),
        "input": input,
        "resolved_params": cfg.params,
        "derived": derived,
        "warnings": warnings,
        "metrics": metrics,
        "checks": checks.iter().map(|c| json!({
            "metric": c.metric, "expected": c.expected, "actual": c.actual, "pass": c.pass,
        })).collect::<Vec<_>>(),
    });
    match cfg.experiment {
        Experiment::Params => {}
        Experiment::Sweep => doc["sweep"] = extra,
        _ => doc["solver"] = extra,
    }
    Ok(RunReport { experiment: cfg.experiment, derived, metrics, warnings, checks, table, json: doc })
}

fn fmt_value(v: Option<f64>) -> String { v.map_or(String::new(), |x| format!("{x:.8e}")) }

/// CSV text: `time_s` plus recorded columns, a sweep table, or the parameter report.
pub fn csv_text(report: &RunReport) -> String {
    let mut out = String::new();
    if report.experiment == Experiment::Params {
        out.push_str("quantity,value,unit\n");
        if let Some(d) = &report.derived {
            for (name, value, unit) in d.rows() {
                let _ = writeln!(out, "\"{name}\",{value:.8e},{unit}");
            }
        }
        return out;
    }
    let (header, rows) = &report.table;
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|v| fmt_value(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// JSON text with a `meta` block carrying the timestamp.
pub fn json_text(report: &RunReport) -> String {
    let mut doc = report.json.clone();
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    doc["meta"] = json!({ "unix_time_s": secs, "version": env!("CARGO_PKG_VERSION") });
    serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n"
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Runs and writes whichever outputs the config names.
pub fn run_and_write(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let report = run(cfg)?;
    if let Some(p) = &cfg.csv {
        write(p, &csv_text(&report))?;
    }
    if let Some(p) = &cfg.json {
        write(p, &json_text(&report))?;
    }
    Ok(report)
}

/// Reads a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(parse_config(&text)?)
}

/// Whole command: returns the process exit code and prints to stdout/stderr.
pub fn main_with(path: &Path, explain_only: bool) -> i32 {
    let outcome = load_config(path).and_then(|cfg| {
        if explain_only {
            explain_config(&cfg).map(|text| {
                print!("{text}");
                0
            })
        } else {
            run_and_write(&cfg).map(|r| {
                print!("{}", r.summary_text());
                r.exit_code()
            })
        }
    });
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}
