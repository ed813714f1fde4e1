//! Flat `key = value` run configuration.
//!
//! Frequencies and rates are linear (Hz) with optional `Hz`/`kHz`/`MHz`/`GHz`
//! suffixes and become angular internally. Other quantities are SI with the
//! suffixes listed in [`Unit`]. `#` starts a comment.

use std::{ f64::consts::TAU, fmt, path::PathBuf, str::FromStr };

use crate::{
    dynamics::{ CouplingForm, SolverOptions },
    physmodel::{ consts::{ BOHR, E_CHARGE }, PhysicalParams },
    protocols::{ NoonExcitation, ProtocolOptions, ResetMode },
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 { write!(f, "config: {}", self.message) } else { write!(f, "config line {}: {}", self.line, self.message) }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Params,
    Cool,
    Fock,
    Superpose,
    Noon,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Params => "params",
            Self::Cool => "cool",
            Self::Fock => "fock",
            Self::Superpose => "superpose",
            Self::Noon => "noon",
            Self::Sweep => "sweep",
        }
    }

    fn defaults(self) -> PhysicalParams {
        match self {
            Self::Params => PhysicalParams::estimates(),
            Self::Cool | Self::Sweep => PhysicalParams::cooling(),
            Self::Fock | Self::Superpose => PhysicalParams::state_engineering(),
            Self::Noon => PhysicalParams::noon(),
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "params" => Self::Params,
            "cool" => Self::Cool,
            "fock" => Self::Fock,
            "superpose" => Self::Superpose,
            "noon" => Self::Noon,
            "sweep" => Self::Sweep,
            _ => return Err(format!("unknown experiment `{s}` (params|cool|fock|superpose|noon|sweep)")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CheckKind {
    Within { value: f64, tol: f64 },
    Greater(f64),
    GreaterEq(f64),
    Less(f64),
    LessEq(f64),
}

impl CheckKind {
    pub fn holds(self, x: f64) -> bool {
        match self {
            Self::Within { value, tol } => (x - value).abs() <= tol,
            Self::Greater(v) => x > v,
            Self::GreaterEq(v) => x >= v,
            Self::Less(v) => x < v,
            Self::LessEq(v) => x <= v,
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Within { value, tol } => write!(f, "{value} +- {tol}"),
            Self::Greater(v) => write!(f, "> {v}"),
            Self::GreaterEq(v) => write!(f, ">= {v}"),
            Self::Less(v) => write!(f, "< {v}"),
            Self::LessEq(v) => write!(f, "<= {v}"),
        }
    }
}

/// `expect.<metric> = …` entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub metric: String,
    pub kind: CheckKind,
    /// The expectation as written.
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub param: String,
    /// Raw values, parsed with the unit rules of `param`.
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: PhysicalParams,
    pub protocol: ProtocolOptions,
    pub m_target: usize,
    pub solver: SolverOptions,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub checks: Vec<Check>,
    pub sweep: Option<SweepSpec>,
    /// Every `key = value` pair in file order, for the JSON echo.
    pub entries: Vec<(String, String)>,
}

impl RunConfig {
    /// Defaults for `experiment` with no overrides.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            params: experiment.defaults(),
            protocol: ProtocolOptions::default(),
            m_target: 4,
            solver: SolverOptions::default(),
            csv: None,
            json: None,
            checks: Vec::new(),
            sweep: None,
            entries: Vec::new(),
        }
    }

    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if let Some(metric) = key.strip_prefix("expect.") {
            if metric.is_empty() {
                return Err("empty metric name in `expect.`".into());
            }
            self.checks.push(Check { metric: metric.into(), kind: parse_check(value)?, text: value.trim().into() });
            return Ok(());
        }
        let p = &mut self.params;
        let o = &mut self.protocol;
        let s = &mut self.solver;
        match key {
            "experiment" => {}
            "charge" => p.charge = quantity(value, Unit::Charge)?,
            "dipole_moment" => p.dipole_moment = quantity(value, Unit::Dipole)?,
            "separation" => p.separation = quantity(value, Unit::Length)?,
            "dipole_arm" => p.dipole_arm = quantity(value, Unit::Length)?,
            "beam_length" => p.beam_length = quantity(value, Unit::Length)?,
            "beam_width" => p.beam_width = quantity(value, Unit::Length)?,
            "beam_thickness" => p.beam_thickness = quantity(value, Unit::Length)?,
            "youngs_modulus" => p.youngs_modulus = quantity(value, Unit::Pressure)?,
            "density" => p.density = quantity(value, Unit::Density)?,
            "effective_mass" => p.effective_mass = quantity(value, Unit::Mass)?,
            "mech_freq" => p.mech_freq[0] = optional(value, Unit::Frequency)?,
            "mech_freq_2" => p.mech_freq[1] = optional(value, Unit::Frequency)?,
            "quality_factor" => p.quality_factor = quantity(value, Unit::None)?,
            "temperature" => p.bath_temperature = quantity(value, Unit::Temperature)?,
            "x_zp" => p.zero_point_motion = optional(value, Unit::Length)?,
            "coupling_g" => p.coupling[0] = optional(value, Unit::Frequency)?,
            "coupling_g_2" => p.coupling[1] = optional(value, Unit::Frequency)?,
            "gamma_m" => p.mech_damping = optional(value, Unit::Frequency)?,
            "omega_l" => p.omega_l = quantity(value, Unit::Frequency)?,
            "omega_r" => p.omega_r = quantity(value, Unit::Frequency)?,
            "omega_mu" => p.omega_mu = quantity(value, Unit::Frequency)?,
            "omega_1" => p.omega_1 = quantity(value, Unit::Frequency)?,
            "omega_2" => p.omega_2 = quantity(value, Unit::Frequency)?,
            "gamma_e" => p.gamma_e = quantity(value, Unit::Frequency)?,
            "gamma_s" => p.gamma_s = quantity(value, Unit::Frequency)?,
            "gamma_p" => p.gamma_p = quantity(value, Unit::Frequency)?,
            "gamma_reset" => p.gamma_reset = quantity(value, Unit::Frequency)?,
            "ensemble_size" => p.ensemble_size = integer(value)?,
            "ensemble_enhance" => p.ensemble_enhance = boolean(value)?,
            "m_target" => self.m_target = integer(value)?,
            "convention" => o.convention = quantity(value, Unit::None)?,
            "pulse_compensation" => o.pulse_compensation = boolean(value)?,
            "hierarchy_factor" => o.hierarchy_factor = quantity(value, Unit::None)?,
            "coupling_form" => {
                o.form = match value {
                    "rwa" => CouplingForm::Rwa,
                    "full" => CouplingForm::Full,
                    _ => return Err(format!("coupling_form must be rwa or full, got `{value}`")),
                }
            }
            "reset" => {
                o.reset = match value {
                    "dissipative" => ResetMode::Dissipative,
                    "pi" => ResetMode::PiPulse,
                    _ => return Err(format!("reset must be dissipative or pi, got `{value}`")),
                }
            }
            "reset_time" => o.reset_time = optional(value, Unit::Time)?,
            "noon_excitation" => {
                o.noon_excitation = match value {
                    "drive" => NoonExcitation::Drive,
                    "inject" => NoonExcitation::Inject,
                    _ => return Err(format!("noon_excitation must be drive or inject, got `{value}`")),
                }
            }
            "cutoff" => {
                o.cutoffs = Some(value.split(',').map(|v| integer::<usize>(v.trim())).collect::<Result<_, _>>()?)
            }
            "cool_time" => o.cool_time = quantity(value, Unit::Time)?,
            "steady_max_time" => o.steady_max_time = quantity(value, Unit::Time)?,
            "rtol" => s.rtol = quantity(value, Unit::None)?,
            "atol" => s.atol = quantity(value, Unit::None)?,
            "max_steps" => s.max_steps = integer(value)?,
            "trace_tol" => s.trace_tol = quantity(value, Unit::None)?,
            "samples" => s.samples = integer(value)?,
            "record_interval" => s.record_interval = optional(value, Unit::Time)?,
            "csv" => self.csv = Some(PathBuf::from(value)),
            "json" => self.json = Some(PathBuf::from(value)),
            "sweep.param" => {
                if !is_numeric_key(value) {
                    return Err(format!("`{value}` is not a sweepable numeric key"));
                }
                self.sweep.get_or_insert_with(empty_sweep).param = value.into()
            }
            "sweep.values" => {
                self.sweep.get_or_insert_with(empty_sweep).values =
                    value.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
            }
            "sweep.experiment" => {
                let e: Experiment = value.parse()?;
                if matches!(e, Experiment::Sweep | Experiment::Params) {
                    return Err("sweep.experiment must be cool, fock, superpose or noon".into());
                }
                self.sweep.get_or_insert_with(empty_sweep).experiment = e;
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

fn empty_sweep() -> SweepSpec { SweepSpec { experiment: Experiment::Cool, param: String::new(), values: Vec::new() } }

const NUMERIC_KEYS: &[&str] = &[
    "charge", "dipole_moment", "separation", "dipole_arm", "beam_length", "beam_width", "beam_thickness",
    "youngs_modulus", "density", "effective_mass", "mech_freq", "mech_freq_2", "quality_factor", "temperature",
    "x_zp", "coupling_g", "coupling_g_2", "gamma_m", "omega_l", "omega_r", "omega_mu", "omega_1", "omega_2",
    "gamma_e", "gamma_s", "gamma_p", "gamma_reset", "ensemble_size", "m_target", "convention", "hierarchy_factor",
    "reset_time", "cool_time", "steady_max_time", "rtol", "atol",
];

fn is_numeric_key(key: &str) -> bool { NUMERIC_KEYS.contains(&key) }

/// Unit family of a key, for suffix handling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    /// Hz, kHz, MHz, GHz; stored ×2π.
    Frequency,
    /// m, mm, um, nm, a0.
    Length,
    /// s, ms, us, ns.
    Time,
    /// K, mK, uK.
    Temperature,
    /// C, e.
    Charge,
    /// Cm, ea0.
    Dipole,
    /// Pa, GPa.
    Pressure,
    /// kg/m3.
    Density,
    /// kg.
    Mass,
    None,
}

impl Unit {
    fn scale(self, suffix: &str) -> Option<f64> {
        let s = suffix.replace(['·', ' ', '*'], "").replace('μ', "u");
        Some(match (self, s.as_str()) {
            (_, "") => 1.0,
            (Self::Frequency, "Hz") => 1.0,
            (Self::Frequency, "kHz") => 1e3,
            (Self::Frequency, "MHz") => 1e6,
            (Self::Frequency, "GHz") => 1e9,
            (Self::Length, "m") => 1.0,
            (Self::Length, "mm") => 1e-3,
            (Self::Length, "um") => 1e-6,
            (Self::Length, "nm") => 1e-9,
            (Self::Length, "a0") => BOHR,
            (Self::Time, "s") => 1.0,
            (Self::Time, "ms") => 1e-3,
            (Self::Time, "us") => 1e-6,
            (Self::Time, "ns") => 1e-9,
            (Self::Temperature, "K") => 1.0,
            (Self::Temperature, "mK") => 1e-3,
            (Self::Temperature, "uK") => 1e-6,
            (Self::Charge, "C") => 1.0,
            (Self::Charge, "e") => E_CHARGE,
            (Self::Dipole, "Cm") => 1.0,
            (Self::Dipole, "ea0") => E_CHARGE * BOHR,
            (Self::Pressure, "Pa") => 1.0,
            (Self::Pressure, "GPa") => 1e9,
            (Self::Density, "kg/m3" | "kg/m^3") => 1.0,
            (Self::Mass, "kg") => 1.0,
            _ => return None,
        })
    }
}

/// Splits `"150 kHz"`, `"150kHz"` or `"3000e"` into number and suffix.
fn split_number(value: &str) -> Option<(f64, &str)> {
    let v = value.trim();
    if let Some((num, rest)) = v.split_once(char::is_whitespace) {
        return num.parse().ok().map(|x| (x, rest.trim()));
    }
    (1..=v.len()).rev().filter(|&k| v.is_char_boundary(k)).find_map(|k| v[..k].parse().ok().map(|x| (x, &v[k..])))
}

/// Value in the external unit of `unit` (Hz for frequencies, SI otherwise).
pub fn external_quantity(value: &str, unit: Unit) -> Result<f64, String> {
    let (x, suffix) = split_number(value).ok_or_else(|| format!("malformed number `{value}`"))?;
    let scale = unit.scale(suffix).ok_or_else(|| format!("unit `{suffix}` not accepted for {unit:?} values"))?;
    if x.is_nan() {
        return Err(format!("malformed number `{value}`"));
    }
    Ok(x * scale)
}

/// Value in internal units (angular for frequencies).
pub fn quantity(value: &str, unit: Unit) -> Result<f64, String> {
    let x = external_quantity(value, unit)?;
    Ok(if unit == Unit::Frequency { x * TAU } else { x })
}

fn optional(value: &str, unit: Unit) -> Result<Option<f64>, String> {
    if matches!(value, "formula" | "beam" | "auto") { Ok(None) } else { quantity(value, unit).map(Some) }
}

fn integer<T: FromStr>(value: &str) -> Result<T, String> { value.parse().map_err(|_| format!("expected an integer, got `{value}`")) }

fn boolean(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got `{value}`")),
    }
}

/// `V +- T`, `V +- T%`, `> V`, `>= V`, `< V`, `<= V`.
fn parse_check(value: &str) -> Result<CheckKind, String> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("malformed number in expectation `{value}`"));
    let v = value.trim();
    for (op, ctor) in [
        (">=", CheckKind::GreaterEq as fn(f64) -> CheckKind),
        ("<=", CheckKind::LessEq),
        (">", CheckKind::Greater),
        ("<", CheckKind::Less),
    ] {
        if let Some(rest) = v.strip_prefix(op) {
            return Ok(ctor(num(rest)?));
        }
    }
    let (center, tol) = v.split_once("+-").or_else(|| v.split_once('±')).ok_or_else(|| {
        format!("expectation `{value}` must be `V +- T`, `V +- T%` or a comparison")
    })?;
    let center = num(center)?;
    let tol = match tol.trim().strip_suffix('%') {
        Some(pct) => num(pct)? / 100.0 * center.abs(),
        None => num(tol)?,
    };
    Ok(CheckKind::Within { value: center, tol })
}

/// Parses a whole configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let split = match content.split_once('=') {
            Some(kv) => Some(kv),
            // strict comparisons: `expect.x > v`
            None if content.starts_with("expect.") => content.find(['<', '>']).map(|k| content.split_at(k)),
            None => None,
        };
        let (key, value) =
            split.ok_or_else(|| ConfigError { line, message: format!("expected `key = value`, got `{content}`") })?;
        let (mut key, mut value) = (key.trim(), value.trim().to_string());
        // `expect.x >= v` splits at the comparison's `=`
        if let Some(op) = key.strip_prefix("expect.").and_then(|k| k.chars().last()).filter(|c| matches!(c, '<' | '>')) {
            key = key[..key.len() - 1].trim_end();
            value = format!("{op}={value}");
        }
        let value = value.as_str();
        if key.is_empty() {
            return Err(ConfigError { line, message: "empty key".into() });
        }
        if value.is_empty() {
            return Err(ConfigError { line, message: format!("missing value for `{key}`") });
        }
        if !key.starts_with("expect.") {
            if let Some((first, ..)) = entries.iter().find(|(_, k2, _)| k2 == key) {
                return Err(ConfigError { line, message: format!("`{key}` already set on line {first}") });
            }
        }
        entries.push((line, key.to_string(), value.to_string()));
    }
    let (exp_line, experiment) = match entries.iter().find(|(_, k, _)| k == "experiment") {
        Some((line, _, v)) => (*line, v.parse::<Experiment>().map_err(|message| ConfigError { line: *line, message })?),
        None => return Err(ConfigError { line: 0, message: "missing required key `experiment`".into() }),
    };
    let mut cfg = RunConfig::new(experiment);
    if experiment == Experiment::Sweep {
        // the base experiment decides the default parameter set
        if let Some((line, _, v)) = entries.iter().find(|(_, k, _)| k == "sweep.experiment") {
            let base: Experiment = v.parse().map_err(|message| ConfigError { line: *line, message })?;
            cfg.params = base.defaults();
        }
    }
    for (line, key, value) in &entries {
        cfg.set(key, value).map_err(|message| ConfigError { line: *line, message })?;
        cfg.entries.push((key.clone(), value.clone()));
    }
    if experiment == Experiment::Sweep {
        let sweep = cfg.sweep.as_ref().ok_or(ConfigError { line: exp_line, message: "sweep needs sweep.param and sweep.values".into() })?;
        if sweep.param.is_empty() {
            return Err(ConfigError { line: exp_line, message: "missing required key `sweep.param`".into() });
        }
        if sweep.values.is_empty() {
            return Err(ConfigError { line: exp_line, message: "missing required key `sweep.values`".into() });
        }
        let mut probe = cfg.clone();
        for v in &sweep.values {
            probe.set(&sweep.param, v).map_err(|message| ConfigError {
                line: entries.iter().find(|(_, k, _)| k == "sweep.values").map_or(0, |e| e.0),
                message: format!("sweep value: {message}"),
            })?;
        }
    }
    Ok(cfg)
}

/// Unit family of a numeric key.
pub fn key_unit(key: &str) -> Unit {
    match key {
        "charge" => Unit::Charge,
        "dipole_moment" => Unit::Dipole,
        "separation" | "dipole_arm" | "beam_length" | "beam_width" | "beam_thickness" | "x_zp" => Unit::Length,
        "youngs_modulus" => Unit::Pressure,
        "density" => Unit::Density,
        "effective_mass" => Unit::Mass,
        "temperature" => Unit::Temperature,
        "reset_time" | "cool_time" | "steady_max_time" | "record_interval" => Unit::Time,
        k if k.starts_with("mech_freq") || k.starts_with("coupling_g") || k.starts_with("omega_") || k.starts_with("gamma_") => {
            Unit::Frequency
        }
        _ => Unit::None,
    }
}
