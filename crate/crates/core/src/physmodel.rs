//! Closed-form physics of the atom–cantilever system.
//!
//! Every rate and frequency is stored angular (rad/s). Linear values (Hz) only
//! appear at the configuration and report boundary, via [`units`].

use serde::Serialize;
use thiserror::Error;

/// CODATA 2018 constants, SI.
pub mod consts {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const H: f64 = 6.626_070_15e-34;
    pub const E_CHARGE: f64 = 1.602_176_634e-19;
    pub const K_B: f64 = 1.380_649e-23;
    pub const EPS0: f64 = 8.854_187_812_8e-12;
    pub const BOHR: f64 = 5.291_772_109_03e-11;
}

use consts::*;

/// Conversions between user-facing and internal units.
pub mod units {
    use std::f64::consts::TAU;

    pub fn hz_to_angular(f: f64) -> f64 { f * TAU }
    pub fn angular_to_hz(w: f64) -> f64 { w / TAU }
    pub fn e_to_coulomb(q: f64) -> f64 { q * super::E_CHARGE }
    pub fn coulomb_to_e(q: f64) -> f64 { q / super::E_CHARGE }
    pub fn ea0_to_cm(mu: f64) -> f64 { mu * super::E_CHARGE * super::BOHR }
    pub fn cm_to_ea0(mu: f64) -> f64 { mu / (super::E_CHARGE * super::BOHR) }
    pub fn bohr_to_m(x: f64) -> f64 { x * super::BOHR }
    pub fn m_to_bohr(x: f64) -> f64 { x / super::BOHR }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("ensemble size must be at least 1")]
    EmptyEnsemble,
}

pub type PhysResult<T> = Result<T, PhysError>;

fn positive(name: &'static str, value: f64) -> PhysResult<f64> {
    if value > 0.0 && value.is_finite() { Ok(value) } else { Err(PhysError::NonPositive { name, value }) }
}

fn non_negative(name: &'static str, value: f64) -> PhysResult<f64> {
    if value >= 0.0 && value.is_finite() { Ok(value) } else { Err(PhysError::Negative { name, value }) }
}

/// Fundamental flexural frequency of a clamped beam, `3.516 (t/l²) √(E/12ρ)`.
///
/// The prefactor expression is returned as an angular frequency; read as
/// such it reproduces the quoted ~578 MHz cantilever to within 2%.
pub fn cantilever_frequency(length: f64, thickness: f64, youngs_modulus: f64, density: f64) -> PhysResult<f64> {
    let l = positive("beam length", length)?;
    let t = positive("beam thickness", thickness)?;
    let e = positive("Young's modulus", youngs_modulus)?;
    let rho = positive("density", density)?;
    Ok(3.516 * t / (l * l) * (e / (12.0 * rho)).sqrt())
}

/// Rough effective mass `ρ l w t / 2`. Approximate; real mode shapes differ.
pub fn effective_mass_estimate(density: f64, length: f64, width: f64, thickness: f64) -> f64 {
    0.5 * density * length * width * thickness
}

/// `√(ħ / 2 m ω)`.
pub fn zero_point_motion(effective_mass: f64, omega: f64) -> PhysResult<f64> {
    let m = positive("effective mass", effective_mass)?;
    let w = positive("mechanical frequency", omega)?;
    Ok((HBAR / (2.0 * m * w)).sqrt())
}

/// Atom–cantilever coupling `𝒢 = Q x_zp μ / (4πε₀ R³ ħ)` in rad/s.
pub fn coupling_strength(charge: f64, x_zp: f64, dipole_moment: f64, separation: f64) -> PhysResult<f64> {
    let r = positive("separation", separation)?;
    Ok(charge * x_zp * dipole_moment / (4.0 * std::f64::consts::PI * EPS0 * r.powi(3) * HBAR))
}

/// Charge needed to reach coupling `g` with the other parameters fixed.
pub fn implied_charge(g: f64, x_zp: f64, dipole_moment: f64, separation: f64) -> PhysResult<f64> {
    let r = positive("separation", separation)?;
    let x = positive("zero-point motion", x_zp)?;
    let mu = positive("dipole moment", dipole_moment)?;
    Ok(g * 4.0 * std::f64::consts::PI * EPS0 * r.powi(3) * HBAR / (x * mu))
}

pub type Vec3 = [f64; 3];

/// Point-dipole field `(3(n̂·p)n̂ − p) / (4πε₀ r³)` of dipole `p` at `source`,
/// evaluated at `point`.
pub fn dipole_field(dipole: Vec3, source: Vec3, point: Vec3) -> PhysResult<Vec3> {
    let r: Vec3 = [point[0] - source[0], point[1] - source[1], point[2] - source[2]];
    let dist = positive("field-point distance", (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt())?;
    let n = [r[0] / dist, r[1] / dist, r[2] / dist];
    let n_dot_p = n[0] * dipole[0] + n[1] * dipole[1] + n[2] * dipole[2];
    let k = 1.0 / (4.0 * std::f64::consts::PI * EPS0 * dist.powi(3));
    Ok([
        k * (3.0 * n_dot_p * n[0] - dipole[0]),
        k * (3.0 * n_dot_p * n[1] - dipole[1]),
        k * (3.0 * n_dot_p * n[2] - dipole[2]),
    ])
}

/// Ratio of the cantilever–cantilever phonon exchange rate to the
/// atom–cantilever coupling, `Q x_zp / (8 μ)`.
pub fn cantilever_exchange_ratio(charge: f64, x_zp: f64, dipole_moment: f64) -> PhysResult<f64> {
    let mu = positive("dipole moment", dipole_moment)?;
    Ok(charge * x_zp / (8.0 * mu))
}

/// Scaling estimate `n² e a₀` of a Rydberg s–p dipole moment.
pub fn rydberg_dipole_estimate(principal_n: u32) -> f64 {
    let n = principal_n as f64;
    n * n * E_CHARGE * BOHR
}

/// Bose occupation `1/(e^{ħω/k_BT} − 1)`; zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> PhysResult<f64> {
    let w = positive("mechanical frequency", omega)?;
    let t = non_negative("temperature", temperature)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (HBAR * w / (K_B * t)).exp_m1())
}

/// `ħω/k_B`.
pub fn oscillator_temperature(omega: f64) -> f64 { HBAR * omega / K_B }

/// Thermal heating rate `k_B T / (ħ Q_m)` in rad/s.
pub fn heating_rate(temperature: f64, quality_factor: f64) -> PhysResult<f64> {
    let t = non_negative("temperature", temperature)?;
    let q = positive("quality factor", quality_factor)?;
    Ok(K_B * t / (HBAR * q))
}

/// Energy damping rate `ω / Q_m`.
pub fn mechanical_damping(omega: f64, quality_factor: f64) -> PhysResult<f64> {
    let w = non_negative("mechanical frequency", omega)?;
    if quality_factor.is_infinite() {
        return Ok(0.0);
    }
    let q = positive("quality factor", quality_factor)?;
    Ok(w / q)
}

/// Order-of-magnitude atom-assisted cooling rate `𝒢² / Ω_L`.
pub fn cooling_rate_estimate(g: f64, omega_l: f64) -> PhysResult<f64> {
    let o = positive("Ω_L", omega_l)?;
    Ok(g * g / o)
}

/// Blockaded-ensemble drive enhancement `√N`.
pub fn collective_enhancement(n: u32) -> PhysResult<f64> {
    if n == 0 {
        return Err(PhysError::EmptyEnsemble);
    }
    Ok((n as f64).sqrt())
}

/// Every experimental constant, SI units with angular rates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhysicalParams {
    /// Cantilever tip charge, C.
    pub charge: f64,
    /// s–p transition dipole moment, C·m.
    pub dipole_moment: f64,
    /// Atom–cantilever separation, m.
    pub separation: f64,
    /// Static charge separation, m. Enters only validity conditions.
    pub dipole_arm: f64,
    pub beam_length: f64,
    pub beam_width: f64,
    pub beam_thickness: f64,
    /// Pa.
    pub youngs_modulus: f64,
    /// kg/m³.
    pub density: f64,
    /// kg.
    pub effective_mass: f64,
    /// Mechanical frequency per mode, rad/s. `None` uses the beam formula.
    pub mech_freq: [Option<f64>; 2],
    pub quality_factor: f64,
    /// K.
    pub bath_temperature: f64,
    /// Overrides the formula zero-point motion, m.
    pub zero_point_motion: Option<f64>,
    /// Overrides the formula coupling per mode, rad/s.
    pub coupling: [Option<f64>; 2],
    /// Overrides ω/Q_m, rad/s.
    pub mech_damping: Option<f64>,
    pub omega_l: f64,
    pub omega_r: f64,
    pub omega_mu: f64,
    pub omega_1: f64,
    pub omega_2: f64,
    pub gamma_e: f64,
    pub gamma_s: f64,
    pub gamma_p: f64,
    pub gamma_reset: f64,
    pub ensemble_size: u32,
    /// Scale Ω_L by √N.
    pub ensemble_enhance: bool,
}

fn mhz(f: f64) -> f64 { units::hz_to_angular(f * 1e6) }
fn khz(f: f64) -> f64 { units::hz_to_angular(f * 1e3) }

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            charge: E_CHARGE,
            dipole_moment: units::ea0_to_cm(35250.0),
            separation: 5e-6,
            dipole_arm: 50e-9,
            beam_length: 0.5e-6,
            beam_width: 0.05e-6,
            beam_thickness: 0.05e-6,
            youngs_modulus: 1000e9,
            density: 3000.0,
            effective_mass: 1.9e-18,
            mech_freq: [Some(mhz(578.0)), None],
            quality_factor: 1e6,
            bath_temperature: 0.1,
            zero_point_motion: None,
            coupling: [None, None],
            mech_damping: None,
            omega_l: mhz(10.0),
            omega_r: mhz(10.0),
            omega_mu: mhz(6.0),
            omega_1: mhz(6.0),
            omega_2: mhz(6.0),
            gamma_e: mhz(5.0),
            gamma_s: 0.0,
            gamma_p: 0.0,
            gamma_reset: mhz(5.0),
            ensemble_size: 1,
            ensemble_enhance: false,
        }
    }
}

impl PhysicalParams {
    /// Parameter-estimate set: single charge, x_zp = 1.1e−3 a₀.
    pub fn estimates() -> Self {
        Self { zero_point_motion: Some(units::bohr_to_m(1.1e-3)), ..Self::default() }
    }

    /// Ground-state cooling, 𝒢/2π = 1 MHz, T = 0.1 K.
    pub fn cooling() -> Self {
        Self { coupling: [Some(mhz(1.0)), None], ..Self::default() }
    }

    /// Fock-state and superposition engineering: 6 MHz square pulses,
    /// 𝒢/2π = 150 kHz, Γ_s = Γ_p = 2π×2 kHz, γ_m = 2π×600 Hz, T = 0.
    pub fn state_engineering() -> Self {
        Self {
            coupling: [Some(khz(150.0)), None],
            omega_l: mhz(6.0),
            omega_r: mhz(6.0),
            omega_mu: mhz(6.0),
            gamma_s: khz(2.0),
            gamma_p: khz(2.0),
            mech_damping: Some(khz(0.6)),
            bath_temperature: 0.0,
            ..Self::default()
        }
    }

    /// Two-cantilever NOON generation in the ideal limit: no mechanical or
    /// Rydberg loss, fast dissipative reset.
    pub fn noon() -> Self {
        let f = mhz(578.0);
        Self {
            mech_freq: [Some(f), Some(f)],
            coupling: [Some(khz(150.0)), Some(khz(150.0))],
            omega_1: mhz(6.0),
            omega_2: mhz(6.0),
            omega_l: mhz(6.0),
            mech_damping: Some(0.0),
            bath_temperature: 0.0,
            ..Self::default()
        }
    }

    /// Frequency of `mode` in rad/s; mode 1 falls back to mode 0.
    pub fn mech_frequency(&self, mode: usize) -> PhysResult<f64> {
        match self.mech_freq.get(mode).copied().flatten() {
            Some(w) => positive("mechanical frequency", w),
            None if mode > 0 => self.mech_frequency(0),
            None => self.beam_frequency(),
        }
    }

    pub fn beam_frequency(&self) -> PhysResult<f64> {
        cantilever_frequency(self.beam_length, self.beam_thickness, self.youngs_modulus, self.density)
    }

    pub fn formula_zero_point_motion(&self, mode: usize) -> PhysResult<f64> {
        zero_point_motion(self.effective_mass, self.mech_frequency(mode)?)
    }

    pub fn x_zp(&self, mode: usize) -> PhysResult<f64> {
        match self.zero_point_motion {
            Some(x) => positive("zero-point motion", x),
            None => self.formula_zero_point_motion(mode),
        }
    }

    pub fn formula_coupling(&self, mode: usize) -> PhysResult<f64> {
        coupling_strength(self.charge, self.x_zp(mode)?, self.dipole_moment, self.separation)
    }

    /// 𝒢 for `mode`: override, else mode-0 override, else the formula.
    pub fn coupling(&self, mode: usize) -> PhysResult<f64> {
        match (self.coupling.get(mode).copied().flatten(), self.coupling[0]) {
            (Some(g), _) => non_negative("coupling", g),
            (None, Some(g)) => non_negative("coupling", g),
            (None, None) => self.formula_coupling(mode),
        }
    }

    /// Tip charge consistent with the coupling actually used.
    pub fn effective_charge(&self, mode: usize) -> PhysResult<f64> {
        match self.coupling.get(mode).copied().flatten().or(self.coupling[0]) {
            Some(g) => implied_charge(g, self.x_zp(mode)?, self.dipole_moment, self.separation),
            None => Ok(self.charge),
        }
    }

    pub fn gamma_m(&self, mode: usize) -> PhysResult<f64> {
        match self.mech_damping {
            Some(g) => non_negative("mechanical damping", g),
            None => mechanical_damping(self.mech_frequency(mode)?, self.quality_factor),
        }
    }

    pub fn n_th(&self, mode: usize) -> PhysResult<f64> {
        thermal_occupation(self.mech_frequency(mode)?, self.bath_temperature)
    }

    /// Ω_L including the collective √N factor when ensemble mode is on.
    pub fn effective_omega_l(&self) -> PhysResult<f64> {
        if self.ensemble_enhance {
            Ok(self.omega_l * collective_enhancement(self.ensemble_size)?)
        } else {
            Ok(self.omega_l)
        }
    }

    pub fn exchange_ratio(&self, mode: usize) -> PhysResult<f64> {
        cantilever_exchange_ratio(self.effective_charge(mode)?, self.x_zp(mode)?, self.dipole_moment)
    }

    pub fn validate(&self) -> PhysResult<()> {
        positive("charge", self.charge)?;
        positive("dipole moment", self.dipole_moment)?;
        positive("separation", self.separation)?;
        positive("effective mass", self.effective_mass)?;
        positive("quality factor", self.quality_factor)?;
        non_negative("bath temperature", self.bath_temperature)?;
        for (name, v) in [
            ("Ω_L", self.omega_l),
            ("Ω_R", self.omega_r),
            ("Ω_μ", self.omega_mu),
            ("Γ_e", self.gamma_e),
            ("Γ_s", self.gamma_s),
            ("Γ_p", self.gamma_p),
            ("Γ_reset", self.gamma_reset),
        ] {
            non_negative(name, v)?;
        }
        if self.ensemble_size == 0 {
            return Err(PhysError::EmptyEnsemble);
        }
        self.mech_frequency(0)?;
        Ok(())
    }

    pub fn report(&self) -> PhysResult<DerivedReport> {
        let w = self.mech_frequency(0)?;
        let x = self.x_zp(0)?;
        let g = self.coupling(0)?;
        let omega_l = self.effective_omega_l()?;
        Ok(DerivedReport {
            beam_frequency_hz: units::angular_to_hz(self.beam_frequency()?),
            mech_frequency_hz: units::angular_to_hz(w),
            effective_mass_kg: self.effective_mass,
            effective_mass_estimate_kg: effective_mass_estimate(
                self.density,
                self.beam_length,
                self.beam_width,
                self.beam_thickness,
            ),
            x_zp_formula_m: self.formula_zero_point_motion(0)?,
            x_zp_m: x,
            x_zp_bohr: units::m_to_bohr(x),
            charge_e: units::coulomb_to_e(self.charge),
            effective_charge_e: units::coulomb_to_e(self.effective_charge(0)?),
            dipole_moment_ea0: units::cm_to_ea0(self.dipole_moment),
            coupling_formula_hz: units::angular_to_hz(self.formula_coupling(0)?),
            coupling_hz: units::angular_to_hz(g),
            exchange_ratio: self.exchange_ratio(0)?,
            oscillator_temperature_k: oscillator_temperature(w),
            thermal_occupation: self.n_th(0)?,
            heating_rate_hz: units::angular_to_hz(heating_rate(self.bath_temperature, self.quality_factor)?),
            mech_damping_hz: units::angular_to_hz(self.gamma_m(0)?),
            cooling_rate_estimate_hz: units::angular_to_hz(cooling_rate_estimate(g, omega_l)?),
            collective_enhancement: collective_enhancement(self.ensemble_size)?,
        })
    }
}

/// Derived quantities, linear units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedReport {
    pub beam_frequency_hz: f64,
    pub mech_frequency_hz: f64,
    pub effective_mass_kg: f64,
    pub effective_mass_estimate_kg: f64,
    pub x_zp_formula_m: f64,
    pub x_zp_m: f64,
    pub x_zp_bohr: f64,
    pub charge_e: f64,
    pub effective_charge_e: f64,
    pub dipole_moment_ea0: f64,
    pub coupling_formula_hz: f64,
    pub coupling_hz: f64,
    pub exchange_ratio: f64,
    pub oscillator_temperature_k: f64,
    pub thermal_occupation: f64,
    pub heating_rate_hz: f64,
    pub mech_damping_hz: f64,
    pub cooling_rate_estimate_hz: f64,
    pub collective_enhancement: f64,
}

impl DerivedReport {
    /// `(name, value, unit)` rows for text output.
    pub fn rows(&self) -> Vec<(&'static str, f64, &'static str)> {
        vec![
            ("beam formula frequency", self.beam_frequency_hz, "Hz"),
            ("mechanical frequency", self.mech_frequency_hz, "Hz"),
            ("effective mass", self.effective_mass_kg, "kg"),
            ("effective mass (ρlwt/2 estimate)", self.effective_mass_estimate_kg, "kg"),
            ("x_zp (formula)", self.x_zp_formula_m, "m"),
            ("x_zp (used)", self.x_zp_m, "m"),
            ("x_zp (used)", self.x_zp_bohr, "a0"),
            ("charge", self.charge_e, "e"),
            ("charge implied by coupling", self.effective_charge_e, "e"),
            ("dipole moment", self.dipole_moment_ea0, "e·a0"),
            ("coupling G/2π (formula)", self.coupling_formula_hz, "Hz"),
            ("coupling G/2π (used)", self.coupling_hz, "Hz"),
            ("G12/G1 exchange ratio", self.exchange_ratio, ""),
            ("T_osc = ħω/k_B", self.oscillator_temperature_k, "K"),
            ("n_th", self.thermal_occupation, ""),
            ("heating rate Γ_mT/2π", self.heating_rate_hz, "Hz"),
            ("damping γ_m/2π", self.mech_damping_hz, "Hz"),
            ("cooling rate G²/Ω_L /2π", self.cooling_rate_estimate_hz, "Hz"),
            ("collective enhancement √N", self.collective_enhancement, ""),
        ]
    }
}
