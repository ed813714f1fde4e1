//! The four experiments compiled to segment lists: ground-state cooling,
//! Fock-state ladders, a two-component Fock superposition and a two-mode
//! NOON state.

mod explain;

use std::{ collections::BTreeMap, f64::consts::PI, sync::Arc };

use num_complex::Complex64 as C64;

use crate::{
    dynamics::{
        evolve, mechanical_bath, steady_state_population, Coupling, CouplingForm, Drive, DynResult,
        HamiltonianSegment, LindbladChannel, SimResult, SolverOptions, SteadyStateOptions,
    },
    hilbert::{ CompositeSpace, DensityMatrix, Factor, StateVector },
    observables::{ self, ObservableSpec },
    physmodel::PhysicalParams,
};

pub use explain::explain;

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("target m = {m_target} needs a phonon cutoff of at least {needed} (have {cutoff})")]
    CutoffTooSmall { m_target: usize, cutoff: usize, needed: usize },
    #[error("expected {expected} phonon cutoffs, got {got}")]
    CutoffCount { expected: usize, got: usize },
    #[error("coupling strength must be positive for a timed exchange")]
    ZeroCoupling,
    #[error("{0} must be positive for a π-pulse")]
    ZeroRabi(&'static str),
    #[error(transparent)]
    Physics(#[from] crate::physmodel::PhysError),
    #[error(transparent)]
    Hilbert(#[from] crate::hilbert::HilbertError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

pub type ProtoResult<T> = Result<T, ProtocolError>;

/// Full `|p, m⟩ → |s, m+1⟩` transfer time `convention · π / (2𝒢√(m+1))`.
pub fn transfer_time(g: f64, m: usize, convention: f64) -> f64 { convention * PI / (2.0 * g * ((m + 1) as f64).sqrt()) }

pub fn pi_pulse_time(rabi: f64) -> f64 { PI / rabi }

fn compensate(t: f64, opts: &ProtocolOptions, overlap: f64) -> f64 {
    if opts.pulse_compensation { (t - overlap).max(0.0) } else { t }
}

fn exchange_time(g: f64, m: usize, opts: &ProtocolOptions, overlap: f64) -> f64 {
    compensate(transfer_time(g, m, opts.convention), opts, overlap)
}

/// How the atom returns to `|g⟩` between NOON steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResetMode {
    /// Decay `s → g` at Γ_reset for the reset window.
    #[default]
    Dissipative,
    /// Coherent Ω_R π-pulse on `g ↔ s`.
    PiPulse,
}

/// How the first NOON excitation is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoonExcitation {
    /// Direct effective drives `g ↔ p1`, `g ↔ p2`.
    #[default]
    Drive,
    /// Start from `(|0,p1,0⟩ + |0,p2,0⟩)/√2`.
    Inject,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOptions {
    /// Phonon cutoffs per mode; `None` uses the per-experiment default.
    pub cutoffs: Option<Vec<usize>>,
    /// Multiplies every transfer time.
    pub convention: f64,
    /// Shorten each exchange by half of each flanking π-pulse, during which
    /// the always-on coupling already acts.
    pub pulse_compensation: bool,
    /// Required ratio of pulse Rabi frequencies to the couplings they compete with.
    pub hierarchy_factor: f64,
    pub form: CouplingForm,
    /// Length of the recorded cooling trajectory, s.
    pub cool_time: f64,
    /// Extra time allowed for the cooling steady state, s.
    pub steady_max_time: f64,
    pub reset: ResetMode,
    /// Dissipative reset window, s; `None` gives 20/Γ_reset.
    pub reset_time: Option<f64>,
    pub noon_excitation: NoonExcitation,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            cutoffs: None,
            convention: 1.0,
            pulse_compensation: true,
            hierarchy_factor: 10.0,
            form: CouplingForm::Rwa,
            cool_time: 30e-6,
            steady_max_time: 2e-3,
            reset: ResetMode::Dissipative,
            reset_time: None,
            noon_excitation: NoonExcitation::Drive,
        }
    }
}

pub const COOLING_CUTOFF: usize = 60;
pub const ENGINEERING_CUTOFF: usize = 8;
pub const NOON_CUTOFF: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolKind {
    Cooling,
    Fock { m_target: usize },
    Superposition,
    Noon,
}

#[derive(Clone, Debug)]
pub struct ProtocolScript {
    pub label: String,
    pub kind: ProtocolKind,
    pub space: Arc<CompositeSpace>,
    pub initial: DensityMatrix,
    pub segments: Vec<HamiltonianSegment>,
    /// Active throughout.
    pub channels: Vec<LindbladChannel>,
    pub target: Option<StateVector>,
    pub record: Vec<ObservableSpec>,
    /// Named segment counts after which the intermediate state is analysed.
    pub checkpoints: Vec<(String, usize)>,
    pub warnings: Vec<String>,
    /// Convergence settings for the cooling steady state.
    pub steady: Option<SteadyStateOptions>,
    /// Mechanical angular frequency per mode, for effective temperatures.
    pub mode_frequencies: Vec<f64>,
}

impl ProtocolScript {
    pub fn total_time(&self) -> f64 { self.segments.iter().map(|s| s.duration).sum() }

    pub fn levels(&self) -> &[String] { self.space.atom_levels() }
}

fn cutoffs(opts: &ProtocolOptions, modes: usize, default: usize) -> ProtoResult<Vec<usize>> {
    match &opts.cutoffs {
        None => Ok(vec![default; modes]),
        Some(c) if c.len() == modes => Ok(c.clone()),
        Some(c) if c.len() == 1 => Ok(vec![c[0]; modes]),
        Some(c) => Err(ProtocolError::CutoffCount { expected: modes, got: c.len() }),
    }
}

fn decays(space: &Arc<CompositeSpace>, list: &[(&str, &str, f64)]) -> DynResult<Vec<LindbladChannel>> {
    list.iter().filter(|(_, _, r)| *r > 0.0).map(|&(a, b, r)| LindbladChannel::decay(space, a, b, r)).collect()
}

fn coupling(mode: usize, lower: &str, upper: &str, g: f64) -> Coupling {
    Coupling { mode, lower: lower.into(), upper: upper.into(), strength: g }
}

fn hierarchy(warnings: &mut Vec<String>, factor: f64, name: &str, rabi: f64, competing: f64) {
    if rabi < factor * competing {
        warnings.push(format!(
            "{name}/2π = {:.4e} Hz is below {factor}× the competing coupling {:.4e} Hz",
            rabi / (2.0 * PI),
            competing / (2.0 * PI)
        ));
    }
}

fn positive_rabi(name: &'static str, r: f64) -> ProtoResult<f64> {
    if r > 0.0 { Ok(r) } else { Err(ProtocolError::ZeroRabi(name)) }
}

fn positive_coupling(g: f64) -> ProtoResult<f64> {
    if g > 0.0 { Ok(g) } else { Err(ProtocolError::ZeroCoupling) }
}

/// Continuous cooling: Ω_L on g↔p, Ω_R on e↔s, 𝒢 absorbing a phonon on
/// p → s, decay e → g, and the thermal bath of the cantilever.
pub fn build_cooling_protocol(params: &PhysicalParams, opts: &ProtocolOptions) -> ProtoResult<ProtocolScript> {
    params.validate()?;
    let n_cut = cutoffs(opts, 1, COOLING_CUTOFF)?;
    let space = CompositeSpace::shared(&["g", "e", "s", "p"], &n_cut)?;
    let n_th = params.n_th(0)?;
    let initial = DensityMatrix::thermal(&space, "g", &[n_th])?;
    let g = params.coupling(0)?;
    let omega_l = params.effective_omega_l()?;
    let seg = HamiltonianSegment::new("cool", opts.cool_time)
        .with_drive(Drive::resonant("Ω_L", "g", "p", omega_l))
        .with_drive(Drive::resonant("Ω_R", "e", "s", params.omega_r))
        .with_coupling(coupling(0, "p", "s", g))
        .with_form(opts.form);
    let mut channels =
        decays(&space, &[("e", "g", params.gamma_e), ("s", "g", params.gamma_s), ("p", "g", params.gamma_p)])?;
    let gamma_m = params.gamma_m(0)?;
    channels.extend(mechanical_bath(&space, 0, gamma_m, n_th)?);
    let w = params.mech_frequency(0)?;
    let record = vec![
        ObservableSpec::ground_state(&space, 0),
        ObservableSpec::mean_phonon(&space, 0),
        ObservableSpec::effective_temperature(&space, 0, w),
        ObservableSpec::level_population("g"),
        ObservableSpec::level_population("e"),
        ObservableSpec::level_population("s"),
        ObservableSpec::level_population("p"),
    ];
    let reference = if gamma_m > 0.0 { gamma_m } else { params.gamma_e.max(g) };
    let mut steady = SteadyStateOptions::new(reference, opts.steady_max_time);
    steady.check_interval = (opts.steady_max_time / 2000.0).max(1e-9);
    Ok(ProtocolScript {
        label: "cooling".into(),
        kind: ProtocolKind::Cooling,
        space,
        initial,
        segments: vec![seg],
        channels,
        target: None,
        record,
        checkpoints: Vec::new(),
        warnings: Vec::new(),
        steady: Some(steady),
        mode_frequencies: vec![w],
    })
}

struct Engineering {
    space: Arc<CompositeSpace>,
    g: f64,
    channels: Vec<LindbladChannel>,
    form: CouplingForm,
}

impl Engineering {
    fn new(params: &PhysicalParams, opts: &ProtocolOptions, n_cut: usize) -> ProtoResult<Self> {
        params.validate()?;
        let space = CompositeSpace::shared(&["g", "s", "p"], &[n_cut])?;
        let mut channels = decays(&space, &[("s", "g", params.gamma_s), ("p", "g", params.gamma_p)])?;
        channels.extend(mechanical_bath(&space, 0, params.gamma_m(0)?, params.n_th(0)?)?);
        Ok(Self { space, g: params.coupling(0)?, channels, form: opts.form })
    }

    /// A segment with the always-on coupling `|p,m⟩ ↔ |s,m+1⟩`.
    fn segment(&self, label: &str, duration: f64) -> HamiltonianSegment {
        HamiltonianSegment::new(label, duration).with_coupling(coupling(0, "s", "p", self.g)).with_form(self.form)
    }

    fn record(&self, m_max: usize) -> Vec<ObservableSpec> {
        let mut r: Vec<ObservableSpec> = (0..=m_max).map(|m| ObservableSpec::population("g", &[m])).collect();
        r.extend((0..=m_max).map(|m| ObservableSpec::phonon_number(&self.space, 0, m)));
        r.extend(["g", "s", "p"].into_iter().map(ObservableSpec::level_population));
        r
    }
}

/// Repeated cycles of Ω_L π-pulse, exchange of `transfer_time(𝒢, j−1)` and
/// Ω_R π-pulse on s → g, ending in `|g, m_target⟩`.
pub fn build_fock_protocol(m_target: usize, params: &PhysicalParams, opts: &ProtocolOptions) -> ProtoResult<ProtocolScript> {
    let n_cut = cutoffs(opts, 1, ENGINEERING_CUTOFF)?[0];
    if m_target + 2 > n_cut {
        return Err(ProtocolError::CutoffTooSmall { m_target, cutoff: n_cut, needed: m_target + 2 });
    }
    let eng = Engineering::new(params, opts, n_cut)?;
    let space = eng.space.clone();
    let mut segments = Vec::new();
    let mut warnings = Vec::new();
    if m_target > 0 {
        let g = positive_coupling(eng.g)?;
        let omega_l = positive_rabi("Ω_L", params.omega_l)?;
        let omega_r = positive_rabi("Ω_R", params.omega_r)?;
        let competing = g * ((m_target + 1) as f64).sqrt();
        hierarchy(&mut warnings, opts.hierarchy_factor, "Ω_L", omega_l, competing);
        hierarchy(&mut warnings, opts.hierarchy_factor, "Ω_R", omega_r, competing);
        for j in 1..=m_target {
            segments.push(
                eng.segment(&format!("π L {j}"), pi_pulse_time(omega_l)).with_drive(Drive::resonant("Ω_L", "g", "p", omega_l)),
            );
            let overlap = 0.5 * (pi_pulse_time(omega_l) + pi_pulse_time(omega_r));
            segments.push(eng.segment(&format!("exchange {j}"), exchange_time(g, j - 1, opts, overlap)));
            segments.push(
                eng.segment(&format!("π R {j}"), pi_pulse_time(omega_r)).with_drive(Drive::resonant("Ω_R", "g", "s", omega_r)),
            );
        }
    }
    let mut record = eng.record(m_target.min(n_cut - 1));
    let target = StateVector::fock(&space, "g", &[m_target])?;
    record.push(ObservableSpec::fidelity(target.clone()));
    Ok(ProtocolScript {
        label: format!("fock m={m_target}"),
        kind: ProtocolKind::Fock { m_target },
        initial: StateVector::fock(&space, "g", &[0])?.to_density(),
        space,
        segments,
        channels: eng.channels,
        target: Some(target),
        record,
        checkpoints: Vec::new(),
        warnings,
        steady: None,
        mode_frequencies: vec![params.mech_frequency(0)?],
    })
}

/// `(|g,0⟩ − |g,2⟩)/√2` via π L, half exchange, microwave π on s↔p,
/// exchange `|p,1⟩ → |s,2⟩` and π R.
pub fn build_superposition_protocol(params: &PhysicalParams, opts: &ProtocolOptions) -> ProtoResult<ProtocolScript> {
    let n_cut = cutoffs(opts, 1, ENGINEERING_CUTOFF)?[0];
    if n_cut < 4 {
        return Err(ProtocolError::CutoffTooSmall { m_target: 2, cutoff: n_cut, needed: 4 });
    }
    let eng = Engineering::new(params, opts, n_cut)?;
    let space = eng.space.clone();
    let g = positive_coupling(eng.g)?;
    let omega_l = positive_rabi("Ω_L", params.omega_l)?;
    let omega_r = positive_rabi("Ω_R", params.omega_r)?;
    let omega_mu = positive_rabi("Ω_μ", params.omega_mu)?;
    let mut warnings = Vec::new();
    hierarchy(&mut warnings, opts.hierarchy_factor, "Ω_L", omega_l, g * 2f64.sqrt());
    hierarchy(&mut warnings, opts.hierarchy_factor, "Ω_R", omega_r, g * 3f64.sqrt());
    hierarchy(&mut warnings, opts.hierarchy_factor, "Ω_μ", omega_mu, g);
    let segments = vec![
        eng.segment("π L", pi_pulse_time(omega_l)).with_drive(Drive::resonant("Ω_L", "g", "p", omega_l)),
        eng.segment(
            "half exchange",
            compensate(transfer_time(g, 0, opts.convention) / 2.0, opts, 0.5 * (pi_pulse_time(omega_l) + pi_pulse_time(omega_mu))),
        ),
        eng.segment("π μ", pi_pulse_time(omega_mu)).with_drive(Drive::resonant("Ω_μ", "s", "p", omega_mu)),
        eng.segment("exchange", exchange_time(g, 1, opts, 0.5 * (pi_pulse_time(omega_mu) + pi_pulse_time(omega_r)))),
        eng.segment("π R", pi_pulse_time(omega_r)).with_drive(Drive::resonant("Ω_R", "g", "s", omega_r)),
    ];
    let target = superposition_target(&space)?;
    let mut record = eng.record(3);
    record.push(ObservableSpec::population("s", &[0]));
    record.push(ObservableSpec::population("s", &[1]));
    record.push(ObservableSpec::population("s", &[2]));
    record.push(ObservableSpec::population("p", &[0]));
    record.push(ObservableSpec::population("p", &[1]));
    record.push(ObservableSpec::fidelity(target.clone()));
    Ok(ProtocolScript {
        label: "superposition".into(),
        kind: ProtocolKind::Superposition,
        initial: StateVector::fock(&space, "g", &[0])?.to_density(),
        space,
        segments,
        channels: eng.channels,
        target: Some(target),
        record,
        checkpoints: Vec::new(),
        warnings,
        steady: None,
        mode_frequencies: vec![params.mech_frequency(0)?],
    })
}

pub fn superposition_target(space: &Arc<CompositeSpace>) -> ProtoResult<StateVector> {
    Ok(StateVector::superposition(space, &[(C64::new(1.0, 0.0), "g", &[0]), (C64::new(-1.0, 0.0), "g", &[2])])?)
}

pub fn noon_target(space: &Arc<CompositeSpace>) -> ProtoResult<StateVector> {
    Ok(StateVector::superposition(space, &[(C64::new(1.0, 0.0), "g", &[2, 0]), (C64::new(-1.0, 0.0), "g", &[0, 2])])?)
}

/// Single-phonon Bell state `(|0,1⟩ + |1,0⟩)/√2` of the two modes, as a vector
/// on the reduced two-mode space.
pub fn bell_vector(cutoffs: &[usize]) -> nalgebra::DVector<C64> {
    let n2 = cutoffs[1];
    let mut v = nalgebra::DVector::zeros(cutoffs[0] * n2);
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[1] = a;
    v[n2] = a;
    v
}

/// Two-step NOON generation on {g, s, p1, p2} with mode 1 on s↔p1 and mode 2
/// on s↔p2. Step 1 excites `(|p1⟩ + |p2⟩)/√2`, exchanges and resets; step 2
/// repeats with `Ω₂ = −Ω₁` and the `m = 1` exchange time.
pub fn build_noon_protocol(params: &PhysicalParams, opts: &ProtocolOptions) -> ProtoResult<ProtocolScript> {
    params.validate()?;
    let n_cut = cutoffs(opts, 2, NOON_CUTOFF)?;
    if n_cut.iter().any(|&n| n < 3) {
        return Err(ProtocolError::CutoffTooSmall { m_target: 2, cutoff: *n_cut.iter().min().unwrap(), needed: 3 });
    }
    let space = CompositeSpace::shared(&["g", "s", "p1", "p2"], &n_cut)?;
    let g1 = positive_coupling(params.coupling(0)?)?;
    let g2 = positive_coupling(params.coupling(1)?)?;
    let omega_1 = positive_rabi("Ω_1", params.omega_1)?;
    let omega_2 = positive_rabi("Ω_2", params.omega_2)?;
    let omega_r = params.omega_r;
    let mut warnings = Vec::new();
    let gmax = g1.max(g2);
    hierarchy(&mut warnings, opts.hierarchy_factor, "Ω_1", omega_1, gmax * 2f64.sqrt());
    hierarchy(&mut warnings, opts.hierarchy_factor, "Ω_2", omega_2, gmax * 2f64.sqrt());

    let seg = |label: &str, duration: f64| {
        HamiltonianSegment::new(label, duration)
            .with_coupling(coupling(0, "s", "p1", g1))
            .with_coupling(coupling(1, "s", "p2", g2))
            .with_form(opts.form)
    };
    // bright-state Rabi frequency of the two equal-magnitude drives
    let bright = (omega_1.powi(2) + omega_2.powi(2)).sqrt();
    let excite = |label: &str, sign: f64| {
        seg(label, pi_pulse_time(bright))
            .with_drive(Drive::resonant("Ω_1", "g", "p1", omega_1))
            .with_drive(Drive::resonant("Ω_2", "g", "p2", sign * omega_2))
    };
    let reset = |label: &str| -> ProtoResult<HamiltonianSegment> {
        Ok(match opts.reset {
            ResetMode::Dissipative => {
                let rate = positive_rabi("Γ_reset", params.gamma_reset)?;
                let t = opts.reset_time.unwrap_or(20.0 / rate);
                seg(label, t).with_channel(LindbladChannel::decay(&space, "s", "g", rate)?)
            }
            ResetMode::PiPulse => {
                let r = positive_rabi("Ω_R", omega_r)?;
                seg(label, pi_pulse_time(r)).with_drive(Drive::resonant("Ω_R", "g", "s", r))
            }
        })
    };
    let gmin = g1.min(g2);
    let mut segments = Vec::new();
    let initial = match opts.noon_excitation {
        NoonExcitation::Drive => {
            segments.push(excite("excite 1", 1.0));
            StateVector::fock(&space, "g", &[0, 0])?.to_density()
        }
        NoonExcitation::Inject => StateVector::superposition(
            &space,
            &[(C64::new(1.0, 0.0), "p1", &[0, 0]), (C64::new(1.0, 0.0), "p2", &[0, 0])],
        )?
        .to_density(),
    };
    segments.push(seg("exchange 1", transfer_time(gmin, 0, opts.convention)));
    segments.push(reset("reset 1")?);
    let step1 = segments.len();
    segments.push(excite("excite 2", -1.0));
    segments.push(seg("exchange 2", transfer_time(gmin, 1, opts.convention)));
    segments.push(reset("reset 2")?);

    let mut channels =
        decays(&space, &[("s", "g", params.gamma_s), ("p1", "g", params.gamma_p), ("p2", "g", params.gamma_p)])?;
    for mode in 0..2 {
        channels.extend(mechanical_bath(&space, mode, params.gamma_m(mode)?, params.n_th(mode)?)?);
    }
    let target = noon_target(&space)?;
    let mut record = vec![
        ObservableSpec::fidelity(target.clone()),
        ObservableSpec::population("g", &[2, 0]),
        ObservableSpec::population("g", &[0, 2]),
        ObservableSpec::population("g", &[1, 1]),
        ObservableSpec::population("g", &[1, 0]),
        ObservableSpec::population("g", &[0, 1]),
    ];
    for mode in 0..2 {
        record.push(ObservableSpec::ground_state(&space, mode));
        record.push(ObservableSpec::mean_phonon(&space, mode));
    }
    record.extend(["g", "s", "p1", "p2"].into_iter().map(ObservableSpec::level_population));
    Ok(ProtocolScript {
        label: "noon".into(),
        kind: ProtocolKind::Noon,
        space,
        initial,
        segments,
        channels,
        target: Some(target),
        record,
        checkpoints: vec![("step1".into(), step1)],
        warnings,
        steady: None,
        mode_frequencies: vec![params.mech_frequency(0)?, params.mech_frequency(1)?],
    })
}

/// Headline numbers of a run.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct RunSummary {
    pub total_time_s: f64,
    pub fidelity: Option<f64>,
    /// Final ground-state population per mode.
    pub p0: Vec<f64>,
    pub t_eff_k: Vec<Option<f64>>,
    /// Experiment-specific scalars, e.g. steady-state P₀ or step-1 entanglement.
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub result: SimResult,
    pub summary: RunSummary,
    /// States at the script's checkpoints.
    pub checkpoint_states: Vec<(String, DensityMatrix)>,
}

fn concat(acc: Option<SimResult>, next: SimResult, offset: f64) -> SimResult {
    let Some(mut acc) = acc else { return next };
    let skip = usize::from(!acc.times.is_empty());
    acc.times.extend(next.times.iter().skip(skip).map(|t| t + offset));
    for (a, b) in acc.series.iter_mut().zip(next.series) {
        a.extend(b.into_iter().skip(skip));
    }
    acc.snapshots.extend(next.snapshots.into_iter().skip(skip));
    let d = &mut acc.diagnostics;
    let n = &next.diagnostics;
    d.steps.accepted += n.steps.accepted;
    d.steps.rejected += n.steps.rejected;
    d.steps.rhs_evals += n.steps.rhs_evals;
    d.max_trace_drift = d.max_trace_drift.max(n.max_trace_drift);
    d.support_size = d.support_size.max(n.support_size);
    d.final_hermiticity_error = n.final_hermiticity_error;
    d.final_min_eigenvalue = n.final_min_eigenvalue;
    d.segment_ends.extend(n.segment_ends.iter().map(|t| t + offset));
    acc.final_state = next.final_state;
    acc
}

/// Runs the script, splitting at checkpoints, and summarises the outcome.
pub fn run_protocol(script: &ProtocolScript, opts: &SolverOptions) -> ProtoResult<ProtocolRun> {
    let mut bounds: Vec<(Option<&str>, usize)> =
        script.checkpoints.iter().map(|(n, k)| (Some(n.as_str()), *k)).collect();
    bounds.push((None, script.segments.len()));
    let mut opts = opts.clone();
    if opts.record_interval.is_none() {
        opts.record_interval = Some(script.total_time().max(f64::MIN_POSITIVE) / opts.samples.max(1) as f64);
    }
    let mut state = script.initial.clone();
    let mut acc: Option<SimResult> = None;
    let mut start = 0;
    let mut offset = 0.0;
    let mut checkpoint_states = Vec::new();
    for (name, end) in bounds {
        let chunk = &script.segments[start..end];
        let res = evolve(&state, chunk, &script.channels, &script.record, &opts)?;
        let dur: f64 = chunk.iter().map(|s| s.duration).sum();
        state = res.final_state.clone();
        if let Some(n) = name {
            checkpoint_states.push((n.to_string(), state.clone()));
        }
        acc = Some(concat(acc, res, offset));
        offset += dur;
        start = end;
    }
    let result = acc.expect("at least one chunk");
    let summary = summarize(script, &result, &checkpoint_states, &opts)?;
    Ok(ProtocolRun { result, summary, checkpoint_states })
}

fn summarize(
    script: &ProtocolScript,
    result: &SimResult,
    checkpoints: &[(String, DensityMatrix)],
    opts: &SolverOptions,
) -> ProtoResult<RunSummary> {
    let rho = &result.final_state;
    let mut summary = RunSummary { total_time_s: script.total_time(), ..RunSummary::default() };
    if let Some(t) = &script.target {
        summary.fidelity = Some(observables::fidelity(rho, t).map_err(crate::dynamics::DynamicsError::from)?);
    }
    for (mode, &w) in script.mode_frequencies.iter().enumerate() {
        let dist = observables::number_distribution(rho, mode).map_err(crate::dynamics::DynamicsError::from)?;
        summary.p0.push(dist[0]);
        summary.t_eff_k.push(observables::effective_temperature_from_excited(dist[1..].iter().sum(), w).ok());
    }
    let m = &mut summary.metrics;
    m.insert("purity".into(), rho.purity());
    m.insert("max_trace_drift".into(), result.diagnostics.max_trace_drift);
    m.insert("min_eigenvalue".into(), result.diagnostics.final_min_eigenvalue);
    m.insert("hermiticity_error".into(), result.diagnostics.final_hermiticity_error);
    m.insert("accepted_steps".into(), result.diagnostics.steps.accepted as f64);
    m.insert("rejected_steps".into(), result.diagnostics.steps.rejected as f64);
    if let Some(steady) = &script.steady {
        let seg = &script.segments[0];
        let ss = steady_state_population(rho, seg, &script.channels, 0, opts, steady)?;
        m.insert("steady_p0".into(), ss.p0);
        m.insert("steady_time_s".into(), script.total_time() + ss.time);
        m.insert("steady_residual".into(), ss.residual);
        if let Ok(t) = observables::effective_temperature(ss.p0, script.mode_frequencies[0]) {
            m.insert("steady_t_eff_k".into(), t);
        }
        if let Some(rate) = result
            .column("p0")
            .and_then(|p| observables::fit_relaxation_rate(&result.times, p, ss.p0))
            .filter(|r| *r > 0.0)
        {
            m.insert("cooling_rate_fit_hz".into(), rate / (2.0 * PI));
        }
    }
    for (name, state) in checkpoints {
        if script.kind == ProtocolKind::Noon {
            let modes = state.partial_trace(&[Factor::Mode(0), Factor::Mode(1)])?;
            let bell = bell_vector(script.space.phonon_cutoffs());
            m.insert(format!("{name}_bell_fidelity"), modes.overlap(&bell));
            m.insert(
                format!("{name}_concurrence"),
                observables::single_phonon_concurrence(&modes).map_err(crate::dynamics::DynamicsError::from)?,
            );
            m.insert(format!("{name}_mode1_entropy"), modes.partial_trace(&[Factor::Mode(0)]).entropy());
            m.insert(format!("{name}_atom_g"), state.partial_trace(&[Factor::Atom])?.data()[(0, 0)].re);
        }
    }
    Ok(summary)
}

pub fn hierarchy_ok(script: &ProtocolScript) -> bool { script.warnings.is_empty() }
