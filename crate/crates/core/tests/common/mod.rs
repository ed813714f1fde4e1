//! Shared oracles and random instances for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{ seq::SliceRandom, Rng, SeedableRng };
use rand_chacha::ChaCha8Rng;
use rydmech::{
    dynamics::{
        assemble_hamiltonian, evolve, mechanical_bath, Coupling, CouplingForm, Drive, Frame, HamiltonianSegment,
        LindbladChannel, SolverOptions,
    },
    hilbert::{ thermal_distribution, CompositeSpace, DensityMatrix, StateVector },
    observables::ObservableSpec,
    physmodel::PhysicalParams,
};

/// Column-stacking superoperator: vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
pub fn dense_liouvillian(h: &DMatrix<C64>, jumps: &[(DMatrix<C64>, f64)]) -> DMatrix<C64> {
    let n = h.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    for (j, rate) in jumps {
        let jdj = j.adjoint() * j;
        let term = j.conjugate().kronecker(j) - (id.kronecker(&jdj) + jdj.transpose().kronecker(&id)) * C64::from(0.5);
        l += term * C64::from(*rate);
    }
    l
}

/// Exact piecewise propagation `∏ exp(𝓛ₖ tₖ) vec(ρ₀)`.
pub fn expm_evolve(rho0: &DensityMatrix, segments: &[HamiltonianSegment], channels: &[LindbladChannel]) -> DMatrix<C64> {
    let space = rho0.space().clone();
    let n = space.total_dim();
    let mut v = DMatrix::from_column_slice(n * n, 1, rho0.data().as_slice());
    for seg in segments {
        let h = assemble_hamiltonian(&space, seg).expect("valid segment").to_dense();
        let jumps: Vec<_> =
            channels.iter().chain(&seg.channels).map(|c| (c.jump.to_dense(), c.rate)).collect();
        v = (dense_liouvillian(&h, &jumps) * C64::from(seg.duration)).exp() * v;
    }
    DMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a - b;
    let d = (&d + d.adjoint()) * C64::from(0.5);
    0.5 * d.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

pub fn rng(seed: u64) -> ChaCha8Rng { ChaCha8Rng::seed_from_u64(seed) }

/// A random open-system problem with total dimension ≤ 12.
#[derive(Clone, Debug)]
pub struct Instance {
    pub space: Arc<CompositeSpace>,
    pub rho0: DensityMatrix,
    pub segments: Vec<HamiltonianSegment>,
    pub channels: Vec<LindbladChannel>,
}

const LEVELS: [&str; 3] = ["a", "b", "c"];

fn random_pair(rng: &mut ChaCha8Rng, levels: &[&'static str]) -> (&'static str, &'static str) {
    let mut pick = levels.to_vec();
    pick.shuffle(rng);
    (pick[0], pick[1])
}

fn random_density(rng: &mut ChaCha8Rng, space: &Arc<CompositeSpace>) -> DensityMatrix {
    let n = space.total_dim();
    if rng.gen_bool(0.3) {
        // a single basis state keeps the integrated support small
        let (atom, occ) = space.decompose(rng.gen_range(0..n));
        let label = space.atom_levels()[atom].clone();
        return StateVector::fock(space, &label, &occ).expect("valid ket").to_density();
    }
    let rank = rng.gen_range(1..=n);
    let a = DMatrix::from_fn(n, rank, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    DensityMatrix::from_matrix(space, rho / tr)
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let (levels, cutoffs): (&[&str], Vec<usize>) = match rng.gen_range(0..4) {
        0 => (&LEVELS[..2], vec![rng.gen_range(2..=6)]),
        1 => (&LEVELS[..3], vec![rng.gen_range(2..=4)]),
        2 => (&LEVELS[..2], vec![2, rng.gen_range(2..=3)]),
        _ => (&LEVELS[..3], vec![2, 2]),
    };
    let space = CompositeSpace::shared(levels, &cutoffs).expect("valid space");
    let rho0 = random_density(rng, &space);
    let mut segments = Vec::new();
    for k in 0..rng.gen_range(1..=3) {
        let mut seg = HamiltonianSegment::new(&format!("seg{k}"), rng.gen_range(0.3..2.5));
        for _ in 0..rng.gen_range(0..=2) {
            let (lo, up) = random_pair(rng, levels);
            seg = seg.with_drive(Drive {
                detuning: rng.gen_range(-1.0..1.0),
                ..Drive::resonant("Ω", lo, up, rng.gen_range(0.2..3.0))
            });
        }
        for _ in 0..rng.gen_range(0..=2) {
            let (lo, up) = random_pair(rng, levels);
            let mode = rng.gen_range(0..cutoffs.len());
            seg = seg.with_coupling(Coupling { mode, lower: lo.into(), upper: up.into(), strength: rng.gen_range(0.1..1.5) });
        }
        if rng.gen_bool(0.3) {
            seg = seg.with_form(CouplingForm::Full);
        }
        if rng.gen_bool(0.3) {
            let (from, to) = random_pair(rng, levels);
            seg = seg.with_channel(LindbladChannel::decay(&space, from, to, rng.gen_range(0.1..1.0)).expect("valid"));
        }
        segments.push(seg);
    }
    let mut channels = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let (from, to) = random_pair(rng, levels);
        channels.push(LindbladChannel::decay(&space, from, to, rng.gen_range(0.0..0.8)).expect("valid"));
    }
    for mode in 0..cutoffs.len() {
        if rng.gen_bool(0.6) {
            channels.extend(mechanical_bath(&space, mode, rng.gen_range(0.0..0.4), rng.gen_range(0.0..1.0)).expect("valid"));
        }
    }
    Instance { space, rho0, segments, channels }
}

/// Adaptive solution vs dense matrix exponential.
pub fn oracle_distance(inst: &Instance) -> f64 {
    let run = evolve(&inst.rho0, &inst.segments, &inst.channels, &[], &SolverOptions::default()).expect("solver");
    trace_distance(run.final_state.data(), &expm_evolve(&inst.rho0, &inst.segments, &inst.channels))
}

/// Trace, Hermiticity and positivity along the recorded trajectory.
pub fn check_state_invariants(inst: &Instance) -> Result<(), String> {
    let opts = SolverOptions { keep_snapshots: true, samples: 40, ..SolverOptions::default() };
    let run = evolve(&inst.rho0, &inst.segments, &inst.channels, &[], &opts).map_err(|e| e.to_string())?;
    for (t, rho) in run.times.iter().zip(&run.snapshots) {
        let drift = (rho.trace() - C64::from(1.0)).norm();
        if drift > 1e-8 {
            return Err(format!("trace drift {drift:e} at t = {t}"));
        }
        if rho.hermiticity_error() > 1e-10 {
            return Err(format!("hermiticity error {:e} at t = {t}", rho.hermiticity_error()));
        }
        if rho.min_eigenvalue() < -1e-6 {
            return Err(format!("eigenvalue {:e} at t = {t}", rho.min_eigenvalue()));
        }
    }
    Ok(())
}

fn basis_populations(space: &Arc<CompositeSpace>) -> Vec<ObservableSpec> {
    (0..space.total_dim())
        .map(|k| {
            let (atom, occ) = space.decompose(k);
            ObservableSpec::population(&space.atom_levels()[atom], &occ)
        })
        .collect()
}

fn final_populations(inst: &Instance, opts: &SolverOptions) -> Result<Vec<f64>, String> {
    let record = basis_populations(&inst.space);
    let run = evolve(&inst.rho0, &inst.segments, &inst.channels, &record, opts).map_err(|e| e.to_string())?;
    Ok(run.series.iter().map(|s| *s.last().expect("recorded")).collect())
}

/// Halving both tolerances moves every final basis population by less than `tol`.
pub fn check_tolerance_halving(inst: &Instance, tol: f64) -> Result<(), String> {
    let base = SolverOptions::default();
    let fine = SolverOptions { rtol: base.rtol / 2.0, atol: base.atol / 2.0, ..base.clone() };
    let a = final_populations(inst, &base)?;
    let b = final_populations(inst, &fine)?;
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if diff < tol { Ok(()) } else { Err(format!("tolerance halving moved a population by {diff:e}")) }
}

/// Phonon-absorbing JC model on {s,p}: `|p,m+1⟩ ↔ |s,m⟩`, s → p recycling,
/// a detuned s↔p drive and a thermal bath. The same physics at cutoffs `n`
/// and `n + 10` yields the same atomic populations, P₀ and ⟨n⟩.
pub fn check_truncation(rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let n_th = rng.gen_range(0.05..1.0);
    let g = rng.gen_range(0.2..1.0);
    let rabi = rng.gen_range(0.0..0.5);
    let detuning = rng.gen_range(1.0..3.0);
    let gamma = rng.gen_range(0.05..0.5);
    let decay = rng.gen_range(0.5..2.0);
    let t = rng.gen_range(1.0..6.0);
    let base = rydmech::hilbert::required_cutoff(n_th, 1e-6);
    let run_at = |cut: usize| -> Result<Vec<f64>, String> {
        let space = CompositeSpace::shared(&["s", "p"], &[cut]).map_err(|e| e.to_string())?;
        let rho0 = DensityMatrix::thermal(&space, "p", &[n_th]).map_err(|e| e.to_string())?;
        let seg = HamiltonianSegment::new("absorb", t)
            .with_drive(Drive { detuning, ..Drive::resonant("Ω", "p", "s", rabi) })
            .with_coupling(Coupling { mode: 0, lower: "p".into(), upper: "s".into(), strength: g });
        let mut channels = vec![LindbladChannel::decay(&space, "s", "p", decay).map_err(|e| e.to_string())?];
        channels.extend(mechanical_bath(&space, 0, gamma, n_th).map_err(|e| e.to_string())?);
        let record = vec![
            ObservableSpec::level_population("s"),
            ObservableSpec::level_population("p"),
            ObservableSpec::ground_state(&space, 0),
            ObservableSpec::mean_phonon(&space, 0),
        ];
        let run = evolve(&rho0, &[seg], &channels, &record, &SolverOptions { samples: 20, ..SolverOptions::default() })
            .map_err(|e| e.to_string())?;
        Ok(run.series.iter().flatten().copied().collect())
    };
    let a = run_at(base)?;
    let b = run_at(base + 10)?;
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if diff < 1e-4 { Ok(diff) } else { Err(format!("cutoff {base} vs {}: observables differ by {diff:e}", base + 10)) }
}

/// Recorded series of a shipped protocol at its default cutoffs and at
/// cutoffs + 10 agree to 1e−4. Cooling is checked on its transient only.
pub fn check_protocol_truncation(kind: &str) -> Result<f64, String> {
    use rydmech::protocols::*;
    let build = |extra: usize| -> Result<ProtocolScript, String> {
        let (params, default, modes) = match kind {
            "cool" => (PhysicalParams::cooling(), COOLING_CUTOFF, 1),
            "fock" | "superpose" => (PhysicalParams::state_engineering(), ENGINEERING_CUTOFF, 1),
            _ => (PhysicalParams::noon(), NOON_CUTOFF, 2),
        };
        let opts = ProtocolOptions { cutoffs: Some(vec![default + extra; modes]), cool_time: 10e-6, ..ProtocolOptions::default() };
        match kind {
            "cool" => build_cooling_protocol(&params, &opts),
            "fock" => build_fock_protocol(4, &params, &opts),
            "superpose" => build_superposition_protocol(&params, &opts),
            _ => build_noon_protocol(&params, &opts),
        }
        .map_err(|e| e.to_string())
    };
    let series = |script: &ProtocolScript| -> Result<Vec<(String, Vec<f64>)>, String> {
        let opts = SolverOptions { samples: 100, ..SolverOptions::default() };
        let run = evolve(&script.initial, &script.segments, &script.channels, &script.record, &opts).map_err(|e| e.to_string())?;
        Ok(run.columns.into_iter().zip(run.series).collect())
    };
    let a = series(&build(0)?)?;
    let b = series(&build(10)?)?;
    let mut worst = 0.0f64;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        // T_eff amplifies tiny P₀ differences through a logarithm
        if name != "t_eff_k" {
            worst = x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(worst, f64::max);
        }
    }
    if worst < 1e-4 { Ok(worst) } else { Err(format!("{kind}: cutoff +10 changes recorded observables by {worst:e}")) }
}

/// Lab-frame JC exchange from |p,m⟩ over one full transfer time: RWA and
/// full coupling agree on every recorded basis population to 1e−3.
pub fn check_rwa_agreement(ratio: f64, m: usize) -> Result<f64, String> {
    let omega = 1.0;
    let g = ratio * omega;
    let space = CompositeSpace::shared(&["s", "p"], &[m + 4]).map_err(|e| e.to_string())?;
    let rho0 = StateVector::fock(&space, "p", &[m]).map_err(|e| e.to_string())?.to_density();
    let duration = std::f64::consts::PI / (2.0 * g * ((m + 1) as f64).sqrt());
    let frame = Frame::Lab { level_energies: vec![("p".into(), omega)], mode_frequencies: vec![omega] };
    let seg = HamiltonianSegment::new("exchange", duration)
        .with_coupling(Coupling { mode: 0, lower: "s".into(), upper: "p".into(), strength: g })
        .with_frame(frame);
    let record = basis_populations(&space);
    let opts = SolverOptions { samples: 50, ..SolverOptions::default() };
    let rwa = evolve(&rho0, &[seg.clone()], &[], &record, &opts).map_err(|e| e.to_string())?;
    let full = evolve(&rho0, &[seg.with_form(CouplingForm::Full)], &[], &record, &opts).map_err(|e| e.to_string())?;
    let diff = rwa
        .series
        .iter()
        .flatten()
        .zip(full.series.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if diff < 1e-3 { Ok(diff) } else { Err(format!("RWA and full forms differ by {diff:e} at 𝒢/ω = {ratio}")) }
}

/// Bose–Einstein distribution without truncation.
pub fn bose(n_th: f64, len: usize) -> Vec<f64> {
    (0..len).map(|m| (n_th / (n_th + 1.0)).powi(m as i32) / (n_th + 1.0)).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 { 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() }

pub fn truncated_thermal(n_th: f64, cutoff: usize) -> Vec<f64> { thermal_distribution(n_th, cutoff) }

pub fn presets_dir() -> std::path::PathBuf { std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets") }
