//! Piecewise-constant Hamiltonians and Lindblad master-equation evolution.
//!
//! Rates are angular (rad/s) with ħ = 1. Drives and couplings are written in
//! the frame rotating with every resonant field, so each segment is
//! time-independent. The lab frame adds the bare mode and level energies and
//! is only meaningful without classical drives.

pub mod integrator;
mod propagator;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::{
    hilbert::{ CompositeSpace, CsrMatrix, DensityMatrix, HilbertError, Operator },
    observables::{ ObservableError, ObservableSpec },
};

pub use integrator::{ Dopri5, StepStats };
pub use propagator::{ Propagator, Support };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("step budget of {steps} exhausted at t = {time:e} s into the interval")]
    ToleranceFailure { steps: usize, time: f64 },
    #[error("step size {step:e} s underflowed at t = {time:e} s into the interval")]
    StepUnderflow { step: f64, time: f64 },
    #[error("trace drifted by {drift:e} (limit {tol:e}) at t = {time:e} s")]
    TraceDrift { drift: f64, tol: f64, time: f64 },
    #[error("segment `{segment}` has negative duration {duration:e} s")]
    NegativeDuration { segment: String, duration: f64 },
    #[error("channel `{channel}` has negative rate {rate:e}")]
    NegativeRate { channel: String, rate: f64 },
    #[error("transition {0}↔{0} couples a level to itself")]
    SelfTransition(String),
    #[error("segment `{0}` drives a transition in the lab frame; drives need the rotating frame")]
    DriveInLabFrame(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no convergence within {time:e} s (relative drift {residual:e} per damping time)")]
    NotConverged { time: f64, residual: f64 },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
}

pub type DynResult<T> = Result<T, DynamicsError>;

/// Classical field on `lower ↔ upper`: `(Ω/2)(σ_lu + σ_ul) − Δ σ_uu`.
#[derive(Clone, Debug, PartialEq)]
pub struct Drive {
    pub label: String,
    pub lower: String,
    pub upper: String,
    pub rabi: f64,
    pub detuning: f64,
}

impl Drive {
    pub fn resonant(label: &str, lower: &str, upper: &str, rabi: f64) -> Self {
        Self { label: label.into(), lower: lower.into(), upper: upper.into(), rabi, detuning: 0.0 }
    }
}

/// Atom–mode coupling of strength 𝒢. In RWA form `|upper, m⟩ ↔ |lower, m+1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub mode: usize,
    pub lower: String,
    pub upper: String,
    pub strength: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CouplingForm {
    #[default]
    Rwa,
    /// `𝒢(b + b†)(σ_lu + σ_ul)`.
    Full,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Frame {
    #[default]
    Rotating,
    /// Adds `Σ ω_ℓ b_ℓ†b_ℓ + Σ E_a σ_aa`; unlisted levels sit at zero.
    Lab { level_energies: Vec<(String, f64)>, mode_frequencies: Vec<f64> },
}

/// Jump operator `L` entering as `rate·(LρL† − ½{L†L, ρ})`.
#[derive(Clone, Debug)]
pub struct LindbladChannel {
    pub label: String,
    pub jump: Operator,
    pub rate: f64,
}

impl LindbladChannel {
    pub fn new(label: &str, jump: Operator, rate: f64) -> DynResult<Self> {
        if !(rate >= 0.0) {
            return Err(DynamicsError::NegativeRate { channel: label.into(), rate });
        }
        Ok(Self { label: label.into(), jump, rate })
    }

    /// Spontaneous decay `from → to` with jump `σ_to,from`.
    pub fn decay(space: &Arc<CompositeSpace>, from: &str, to: &str, rate: f64) -> DynResult<Self> {
        Self::new(&format!("decay {from}->{to}"), Operator::transition(space, to, from)?, rate)
    }
}

/// Thermal bath of `mode`: `b` at `γ(n+1)`, `b†` at `γn`. Zero-rate channels are omitted.
pub fn mechanical_bath(space: &Arc<CompositeSpace>, mode: usize, gamma: f64, n_th: f64) -> DynResult<Vec<LindbladChannel>> {
    if !(gamma >= 0.0) {
        return Err(DynamicsError::NegativeRate { channel: format!("mode {mode} damping"), rate: gamma });
    }
    if !(n_th >= 0.0) {
        return Err(HilbertError::NegativeOccupation(n_th).into());
    }
    let mut out = Vec::new();
    if gamma > 0.0 {
        out.push(LindbladChannel::new(
            &format!("mode {mode} emission"),
            Operator::annihilation(space, mode)?,
            gamma * (n_th + 1.0),
        )?);
        if n_th > 0.0 {
            out.push(LindbladChannel::new(
                &format!("mode {mode} absorption"),
                Operator::creation(space, mode)?,
                gamma * n_th,
            )?);
        }
    }
    Ok(out)
}

/// One piecewise-constant stretch of a protocol.
#[derive(Clone, Debug, Default)]
pub struct HamiltonianSegment {
    pub label: String,
    pub duration: f64,
    pub drives: Vec<Drive>,
    pub couplings: Vec<Coupling>,
    pub form: CouplingForm,
    pub frame: Frame,
    /// Active only during this segment, on top of the run-wide channels.
    pub channels: Vec<LindbladChannel>,
}

impl HamiltonianSegment {
    pub fn new(label: &str, duration: f64) -> Self { Self { label: label.into(), duration, ..Self::default() } }

    pub fn with_drive(mut self, drive: Drive) -> Self {
        self.drives.push(drive);
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.couplings.push(coupling);
        self
    }

    pub fn with_channel(mut self, channel: LindbladChannel) -> Self {
        self.channels.push(channel);
        self
    }

    pub fn with_form(mut self, form: CouplingForm) -> Self {
        self.form = form;
        self
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }
}

fn check_pair(space: &CompositeSpace, lower: &str, upper: &str) -> DynResult<()> {
    space.level_index(lower)?;
    space.level_index(upper)?;
    if lower == upper {
        return Err(DynamicsError::SelfTransition(lower.into()));
    }
    Ok(())
}

pub fn assemble_hamiltonian(space: &Arc<CompositeSpace>, segment: &HamiltonianSegment) -> DynResult<Operator> {
    if !(segment.duration >= 0.0) {
        return Err(DynamicsError::NegativeDuration { segment: segment.label.clone(), duration: segment.duration });
    }
    let mut h = Operator::zero(space);
    for d in &segment.drives {
        check_pair(space, &d.lower, &d.upper)?;
        if matches!(segment.frame, Frame::Lab { .. }) && d.rabi != 0.0 {
            return Err(DynamicsError::DriveInLabFrame(segment.label.clone()));
        }
        let lu = Operator::transition(space, &d.lower, &d.upper)?;
        let x = &lu + &lu.dagger();
        h = &h + &x.scale(d.rabi / 2.0);
        if d.detuning != 0.0 {
            h = &h - &Operator::transition(space, &d.upper, &d.upper)?.scale(d.detuning);
        }
    }
    for c in &segment.couplings {
        check_pair(space, &c.lower, &c.upper)?;
        let b = Operator::annihilation(space, c.mode)?;
        let bd = b.dagger();
        let lu = Operator::transition(space, &c.lower, &c.upper)?;
        let ul = lu.dagger();
        let term = match segment.form {
            CouplingForm::Rwa => &(&bd * &lu) + &(&b * &ul),
            CouplingForm::Full => &(&b + &bd) * &(&lu + &ul),
        };
        h = &h + &term.scale(c.strength);
    }
    if let Frame::Lab { level_energies, mode_frequencies } = &segment.frame {
        if mode_frequencies.len() != space.mode_count() {
            return Err(DynamicsError::DimensionMismatch { expected: space.mode_count(), got: mode_frequencies.len() });
        }
        for (mode, &w) in mode_frequencies.iter().enumerate() {
            h = &h + &Operator::number(space, mode)?.scale(w);
        }
        for (level, e) in level_energies {
            h = &h + &Operator::transition(space, level, level)?.scale(*e);
        }
    }
    Ok(h)
}

/// `−i[H, ρ] + Σ rate·(LρL† − ½{L†L, ρ})` on dense matrices.
pub fn lindblad_rhs(rho: &DMatrix<C64>, h: &Operator, channels: &[LindbladChannel]) -> DynResult<DMatrix<C64>> {
    let n = h.dim();
    if rho.nrows() != n || rho.ncols() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: rho.nrows() });
    }
    let hd = h.to_dense();
    let i = C64::new(0.0, 1.0);
    let mut out = (&hd * rho - rho * &hd) * -i;
    for ch in channels {
        if ch.jump.dim() != n {
            return Err(DynamicsError::DimensionMismatch { expected: n, got: ch.jump.dim() });
        }
        let l = ch.jump.to_dense();
        let ld = l.adjoint();
        let ldl = &ld * &l;
        let term = &l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0);
        out += term * C64::new(ch.rate, 0.0);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Step budget per integration interval.
    pub max_steps: usize,
    pub trace_tol: f64,
    /// Spacing of the output grid; `None` gives `samples` intervals over the run.
    pub record_interval: Option<f64>,
    pub samples: usize,
    /// Keep the full state at every output time.
    pub keep_snapshots: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 5_000_000,
            trace_tol: 1e-6,
            record_interval: None,
            samples: 400,
            keep_snapshots: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub steps: StepStats,
    pub max_trace_drift: f64,
    /// Number of density-matrix entries actually integrated.
    pub support_size: usize,
    pub final_hermiticity_error: f64,
    pub final_min_eigenvalue: f64,
    /// Cumulative end time of each segment.
    pub segment_ends: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    /// `series[c][k]` is column `c` at `times[k]`.
    pub series: Vec<Vec<f64>>,
    pub snapshots: Vec<DensityMatrix>,
    pub final_state: DensityMatrix,
    pub diagnostics: Diagnostics,
}

impl SimResult {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|k| self.series[k].as_slice())
    }

    pub fn final_value(&self, name: &str) -> Option<f64> { self.column(name).and_then(|c| c.last().copied()) }

    pub fn total_time(&self) -> f64 { self.diagnostics.segment_ends.last().copied().unwrap_or(0.0) }
}

fn output_grid(total: f64, opts: &SolverOptions) -> Vec<f64> {
    if total <= 0.0 {
        return vec![0.0];
    }
    let dt = opts.record_interval.filter(|d| *d > 0.0).unwrap_or(total / opts.samples.max(1) as f64);
    let eps = 1e-9 * dt;
    let mut grid: Vec<f64> = (0..).map(|k| k as f64 * dt).take_while(|t| *t <= total + eps).collect();
    match grid.last_mut() {
        Some(last) if (*last - total).abs() <= eps => *last = total,
        _ => grid.push(total),
    }
    grid
}

/// Integrates `ρ₀` through `segments` under the run-wide `channels`,
/// recording `record` on a uniform grid.
pub fn evolve(
    rho0: &DensityMatrix,
    segments: &[HamiltonianSegment],
    channels: &[LindbladChannel],
    record: &[ObservableSpec],
    opts: &SolverOptions,
) -> DynResult<SimResult> {
    let space = rho0.space().clone();
    for spec in record {
        spec.validate(&space)?;
    }
    let mut prop = Propagator::new(rho0, segments, channels, opts)?;
    let mut segment_ends = Vec::with_capacity(segments.len());
    let mut acc = 0.0;
    for s in segments {
        acc += s.duration;
        segment_ends.push(acc);
    }
    let grid = output_grid(acc, opts);
    let mut series = vec![Vec::with_capacity(grid.len()); record.len()];
    let mut snapshots = Vec::new();
    let mut max_drift = 0.0f64;

    let mut sample = |prop: &Propagator, t: f64, series: &mut Vec<Vec<f64>>, max_drift: &mut f64| -> DynResult<()> {
        let drift = (prop.trace() - 1.0).abs();
        *max_drift = max_drift.max(drift);
        if drift > opts.trace_tol {
            return Err(DynamicsError::TraceDrift { drift, tol: opts.trace_tol, time: t });
        }
        for (col, spec) in series.iter_mut().zip(record) {
            col.push(prop.evaluate(spec)?);
        }
        if opts.keep_snapshots {
            snapshots.push(prop.density());
        }
        Ok(())
    };

    sample(&prop, 0.0, &mut series, &mut max_drift)?;
    let mut next = 1usize;
    let mut t = 0.0;
    let eps = 1e-12 * acc.max(f64::MIN_POSITIVE);
    for (si, &end) in segment_ends.iter().enumerate() {
        if segments[si].duration == 0.0 {
            continue;
        }
        prop.select(si);
        while t < end - eps {
            let (target, on_grid) = match grid.get(next) {
                Some(&g) if g <= end + eps => (g.min(end), true),
                _ => (end, false),
            };
            prop.advance(target - t)?;
            t = target;
            if on_grid {
                sample(&prop, grid[next], &mut series, &mut max_drift)?;
                next += 1;
            } else {
                let drift = (prop.trace() - 1.0).abs();
                max_drift = max_drift.max(drift);
                if drift > opts.trace_tol {
                    return Err(DynamicsError::TraceDrift { drift, tol: opts.trace_tol, time: t });
                }
            }
        }
        t = end;
    }
    drop(sample);
    let final_state = prop.density();
    let diagnostics = Diagnostics {
        steps: prop.stats().clone(),
        max_trace_drift: max_drift,
        support_size: prop.support().len(),
        final_hermiticity_error: final_state.hermiticity_error(),
        final_min_eigenvalue: final_state.min_eigenvalue(),
        segment_ends,
    };
    Ok(SimResult {
        times: grid[..next.min(grid.len())].to_vec(),
        columns: record.iter().map(|s| s.name.clone()).collect(),
        series,
        snapshots,
        final_state,
        diagnostics,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyStateOptions {
    /// Rate defining one relaxation time; usually the mechanical damping γ_m.
    pub reference_rate: f64,
    /// Converged once `|dP₀/dt| / (P₀ · reference_rate)` falls below this.
    pub tol: f64,
    pub max_time: f64,
    pub check_interval: f64,
}

impl SteadyStateOptions {
    pub fn new(reference_rate: f64, max_time: f64) -> Self {
        Self { reference_rate, tol: 1e-4, max_time, check_interval: max_time / 2000.0 }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub p0: f64,
    pub time: f64,
    /// Relative drift per reference time at the last check.
    pub residual: f64,
    /// `(t, P₀)` at every check.
    pub history: Vec<(f64, f64)>,
    pub final_state: DensityMatrix,
}

/// Evolves under one constant segment until the ground-state population of
/// `mode` stops changing.
pub fn steady_state_population(
    rho0: &DensityMatrix,
    segment: &HamiltonianSegment,
    channels: &[LindbladChannel],
    mode: usize,
    opts: &SolverOptions,
    steady: &SteadyStateOptions,
) -> DynResult<SteadyState> {
    let space = rho0.space().clone();
    let p0_spec = ObservableSpec::ground_state(&space, mode);
    p0_spec.validate(&space)?;
    let mut seg = segment.clone();
    seg.duration = steady.max_time;
    let mut prop = Propagator::new(rho0, std::slice::from_ref(&seg), channels, opts)?;
    prop.select(0);
    let mut t = 0.0;
    let mut history = vec![(0.0, prop.evaluate(&p0_spec)?)];
    let relative_drift = |prop: &Propagator| -> DynResult<(f64, f64)> {
        let p = prop.evaluate(&p0_spec)?;
        let dp = prop.derivative(&p0_spec)?;
        Ok((p, dp.abs() / (p.max(f64::MIN_POSITIVE) * steady.reference_rate)))
    };
    let mut residual = f64::INFINITY;
    while t < steady.max_time {
        let span = steady.check_interval.min(steady.max_time - t);
        prop.advance(span)?;
        t += span;
        let drift = (prop.trace() - 1.0).abs();
        if drift > opts.trace_tol {
            return Err(DynamicsError::TraceDrift { drift, tol: opts.trace_tol, time: t });
        }
        let (p, r) = relative_drift(&prop)?;
        residual = r;
        history.push((t, p));
        if r < steady.tol {
            return Ok(SteadyState { p0: p, time: t, residual: r, history, final_state: prop.density() });
        }
    }
    Err(DynamicsError::NotConverged { time: t, residual })
}

#[cfg(test)]
mod tests;

/// Effective non-Hermitian Hamiltonian `H − (i/2) Σ rate·L†L`.
pub(crate) fn effective_hamiltonian(h: &CsrMatrix, channels: &[&LindbladChannel]) -> CsrMatrix {
    channels.iter().fold(h.clone(), |acc, ch| {
        let ldl = ch.jump.matrix().adjoint().matmul(ch.jump.matrix());
        acc.add(&ldl.scale(C64::new(0.0, -0.5 * ch.rate)))
    })
}
