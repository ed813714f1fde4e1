use super::*;
use crate::{ hilbert::StateVector, observables::ObservableSpec };
use std::f64::consts::{ PI, TAU };

fn c(x: f64) -> C64 { C64::new(x, 0.0) }

fn space(levels: &[&str], cutoffs: &[usize]) -> Arc<CompositeSpace> { CompositeSpace::shared(levels, cutoffs).unwrap() }

#[test]
fn two_level_drive_eigenvalues() {
    let s = space(&["g", "p"], &[2]);
    let omega = TAU * 10e6;
    let seg = HamiltonianSegment::new("L", 1.0).with_drive(Drive::resonant("L", "g", "p", omega));
    let h = assemble_hamiltonian(&s, &seg).unwrap();
    assert!(h.hermiticity_error() < 1e-12);
    let mut ev = crate::hilbert::hermitian_eigenvalues(&h.to_dense());
    ev.sort_by(f64::total_cmp);
    for (k, e) in ev.iter().enumerate() {
        let expect = if k < 2 { -omega / 2.0 } else { omega / 2.0 };
        assert!((e - expect).abs() < 1e-6 * omega);
    }
}

#[test]
fn detuning_shifts_upper_level() {
    let s = space(&["g", "p"], &[2]);
    let mut d = Drive::resonant("L", "g", "p", 0.0);
    d.detuning = 3.0;
    let h = assemble_hamiltonian(&s, &HamiltonianSegment::new("x", 1.0).with_drive(d)).unwrap();
    let p0 = s.index(1, &[0]);
    assert_eq!(h.matrix().get(p0, p0), c(-3.0));
}

#[test]
fn rwa_and_full_coupling_elements() {
    let s = space(&["s", "p"], &[2]);
    let g = TAU * 150e3;
    let cpl = Coupling { mode: 0, lower: "s".into(), upper: "p".into(), strength: g };
    let rwa = assemble_hamiltonian(&s, &HamiltonianSegment::new("x", 1.0).with_coupling(cpl.clone())).unwrap();
    let s1 = s.index(0, &[1]);
    let p0 = s.index(1, &[0]);
    let s0 = s.index(0, &[0]);
    let p1 = s.index(1, &[1]);
    assert!((rwa.matrix().get(s1, p0) - c(g)).norm() < 1e-9);
    assert_eq!(rwa.matrix().get(s0, p1), c(0.0));
    let full = assemble_hamiltonian(
        &s,
        &HamiltonianSegment::new("x", 1.0).with_coupling(cpl).with_form(CouplingForm::Full),
    )
    .unwrap();
    assert!((full.matrix().get(s0, p1) - c(g)).norm() < 1e-9);
    assert!(full.hermiticity_error() < 1e-12 && rwa.hermiticity_error() < 1e-12);
}

#[test]
fn assembly_errors() {
    let s = space(&["g", "p"], &[2]);
    let bad = HamiltonianSegment::new("x", 1.0).with_drive(Drive::resonant("L", "g", "q", 1.0));
    assert!(matches!(assemble_hamiltonian(&s, &bad), Err(DynamicsError::Hilbert(HilbertError::UnknownLevel(_)))));
    let neg = HamiltonianSegment::new("x", -1.0);
    assert!(matches!(assemble_hamiltonian(&s, &neg), Err(DynamicsError::NegativeDuration { .. })));
    let lab = HamiltonianSegment::new("x", 1.0)
        .with_drive(Drive::resonant("L", "g", "p", 1.0))
        .with_frame(Frame::Lab { level_energies: vec![], mode_frequencies: vec![1.0] });
    assert!(matches!(assemble_hamiltonian(&s, &lab), Err(DynamicsError::DriveInLabFrame(_))));
}

#[test]
fn dense_rhs_is_traceless() {
    let s = space(&["g", "e"], &[3]);
    let h = assemble_hamiltonian(
        &s,
        &HamiltonianSegment::new("x", 1.0)
            .with_drive(Drive::resonant("L", "g", "e", 1.3))
            .with_coupling(Coupling { mode: 0, lower: "g".into(), upper: "e".into(), strength: 0.4 }),
    )
    .unwrap();
    let mut ch = vec![LindbladChannel::decay(&s, "e", "g", 0.7).unwrap()];
    ch.extend(mechanical_bath(&s, 0, 0.2, 1.1).unwrap());
    let a = DMatrix::from_fn(6, 6, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64));
    let rho = &a * a.adjoint();
    let d = lindblad_rhs(&rho, &h, &ch).unwrap();
    assert!(d.trace().norm() < 1e-12);
    assert!((&d - d.adjoint()).norm() < 1e-12);
}

#[test]
fn restricted_generator_matches_dense_rhs() {
    let s = space(&["g", "s", "p"], &[3]);
    let seg = HamiltonianSegment::new("x", 1.0)
        .with_drive(Drive { label: "L".into(), lower: "g".into(), upper: "p".into(), rabi: 1.1, detuning: 0.3 })
        .with_coupling(Coupling { mode: 0, lower: "s".into(), upper: "p".into(), strength: 0.5 });
    let mut ch = vec![LindbladChannel::decay(&s, "s", "g", 0.9).unwrap()];
    ch.extend(mechanical_bath(&s, 0, 0.3, 0.5).unwrap());
    let n = s.total_dim();
    let a = DMatrix::from_fn(n, n, |i, j| C64::new(((3 * i + j) % 7) as f64 - 3.0, ((i * j) % 4) as f64 - 1.5));
    let m = &a * a.adjoint();
    let tr = m.trace();
    let rho = DensityMatrix::from_matrix(&s, m / tr);
    let prop = Propagator::new(&rho, std::slice::from_ref(&seg), &ch, &SolverOptions::default()).unwrap();
    assert_eq!(prop.support().len(), n * n);
    let h = assemble_hamiltonian(&s, &seg).unwrap();
    let dense = lindblad_rhs(rho.data(), &h, &ch).unwrap();
    // compare the full derivative through the pure-population observables of each basis state
    for i in 0..n {
        let (a, occ) = s.decompose(i);
        let spec = ObservableSpec::population(&s.atom_levels()[a], &occ);
        let got = prop.derivative(&spec).unwrap();
        assert!((got - dense[(i, i)].re).abs() < 1e-12, "{i}: {got} vs {}", dense[(i, i)].re);
    }
}

#[test]
fn support_is_block_sparse_for_conserving_dynamics() {
    let s = space(&["g", "s", "p"], &[10]);
    let seg = HamiltonianSegment::new("x", 1.0)
        .with_coupling(Coupling { mode: 0, lower: "s".into(), upper: "p".into(), strength: 1.0 });
    let rho = StateVector::fock(&s, "p", &[0]).unwrap().to_density();
    let prop = Propagator::new(&rho, &[seg], &[], &SolverOptions::default()).unwrap();
    assert_eq!(prop.support().len(), 4);
}

#[test]
fn free_decay_is_exponential() {
    let s = space(&["g", "e"], &[2]);
    let gamma = 2.5;
    let ch = [LindbladChannel::decay(&s, "e", "g", gamma).unwrap()];
    let rho = StateVector::fock(&s, "e", &[0]).unwrap().to_density();
    let res = evolve(
        &rho,
        &[HamiltonianSegment::new("wait", 2.0)],
        &ch,
        &[ObservableSpec::level_population("e")],
        &SolverOptions { samples: 20, ..SolverOptions::default() },
    )
    .unwrap();
    for (t, p) in res.times.iter().zip(res.column("pop_e").unwrap()) {
        assert!((p - (-gamma * t).exp()).abs() < 1e-8, "t={t}");
    }
    assert_eq!(res.times.len(), 21);
    assert!(res.diagnostics.max_trace_drift < 1e-10);
}

#[test]
fn pi_pulse_inverts() {
    let s = space(&["g", "p"], &[2]);
    let omega = TAU * 1e6;
    let rho = StateVector::fock(&s, "g", &[0]).unwrap().to_density();
    let seg = HamiltonianSegment::new("pi", PI / omega).with_drive(Drive::resonant("L", "g", "p", omega));
    let res = evolve(&rho, &[seg], &[], &[ObservableSpec::level_population("p")], &SolverOptions::default()).unwrap();
    assert!((0.5e-6 - res.total_time()).abs() < 1e-15);
    assert!((res.final_value("pop_p").unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn vacuum_rabi_transfer() {
    let s = space(&["s", "p"], &[3]);
    let g = TAU * 150e3;
    let t = PI / (2.0 * g);
    assert!((t - 1.6667e-6).abs() < 1e-9);
    let rho = StateVector::fock(&s, "p", &[0]).unwrap().to_density();
    let seg = HamiltonianSegment::new("x", t).with_coupling(Coupling {
        mode: 0,
        lower: "s".into(),
        upper: "p".into(),
        strength: g,
    });
    let res = evolve(&rho, &[seg], &[], &[ObservableSpec::population("s", &[1])], &SolverOptions::default()).unwrap();
    assert!((res.final_value("pop_s_m1").unwrap() - 1.0).abs() < 1e-7);
    let col = res.column("pop_s_m1").unwrap();
    for (tk, p) in res.times.iter().zip(col) {
        assert!((p - (g * tk).sin().powi(2)).abs() < 1e-7);
    }
}

#[test]
fn mechanical_bath_relaxes_to_thermal_state() {
    let n_th = 0.8;
    let cutoff = 30;
    let s = space(&["g", "e"], &[cutoff]);
    let gamma = 1.0;
    let ch = mechanical_bath(&s, 0, gamma, n_th).unwrap();
    let rho = StateVector::fock(&s, "g", &[3]).unwrap().to_density();
    let res = evolve(&rho, &[HamiltonianSegment::new("wait", 40.0)], &ch, &[], &SolverOptions::default()).unwrap();
    let got = crate::observables::number_distribution(&res.final_state, 0).unwrap();
    let expect = crate::hilbert::thermal_distribution(n_th, cutoff);
    let tv: f64 = got.iter().zip(&expect).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    assert!(tv < 1e-4, "total variation {tv}");
}

#[test]
fn zero_temperature_bath_has_single_channel() {
    let s = space(&["g", "e"], &[3]);
    assert_eq!(mechanical_bath(&s, 0, 1.0, 0.0).unwrap().len(), 1);
    assert!(mechanical_bath(&s, 0, 0.0, 2.0).unwrap().is_empty());
    assert!(LindbladChannel::new("x", Operator::zero(&s), -1.0).is_err());
}

#[test]
fn decoupled_steady_state_keeps_thermal_ground_population() {
    let s = space(&["g", "e", "s", "p"], &[40]);
    let n_th = 2.0;
    let rho = DensityMatrix::thermal(&s, "g", &[n_th]).unwrap();
    let ch = mechanical_bath(&s, 0, 1e3, n_th).unwrap();
    let seg = HamiltonianSegment::new("cool", 0.0).with_drive(Drive::resonant("L", "g", "p", 1e6));
    let ss = steady_state_population(&rho, &seg, &ch, 0, &SolverOptions::default(), &SteadyStateOptions::new(1e3, 1e-2))
        .unwrap();
    assert!((ss.p0 - crate::hilbert::thermal_distribution(n_th, 40)[0]).abs() < 1e-10);
    assert!((ss.p0 - 1.0 / (n_th + 1.0)).abs() < 1e-7);
}
