//! Adaptive integration against exact propagation exp(𝓛t) of the dense
//! Liouvillian for a damped, driven Jaynes–Cummings system.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rydmech::{
    dynamics::{
        assemble_hamiltonian, evolve, mechanical_bath, Coupling, Drive, HamiltonianSegment, LindbladChannel,
        SolverOptions,
    },
    hilbert::{ CompositeSpace, DensityMatrix, StateVector },
};

/// Column-stacking superoperator: vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
fn liouvillian(h: &DMatrix<C64>, jumps: &[(DMatrix<C64>, f64)]) -> DMatrix<C64> {
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

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = CompositeSpace::shared(&["s", "p"], &[3])?;
    let (g, rabi) = (TAU * 1e5, TAU * 3e5);
    let seg = HamiltonianSegment::new("jc", 8e-6)
        .with_drive(Drive { detuning: TAU * 5e4, ..Drive::resonant("Ω", "s", "p", rabi) })
        .with_coupling(Coupling { mode: 0, lower: "s".into(), upper: "p".into(), strength: g });
    let mut channels = vec![LindbladChannel::decay(&space, "p", "s", TAU * 2e4)?];
    channels.extend(mechanical_bath(&space, 0, TAU * 1e4, 0.3)?);
    let rho0 = StateVector::fock(&space, "p", &[0])?.to_density();

    let run = evolve(&rho0, &[seg.clone()], &channels, &[], &SolverOptions::default())?;

    let h = assemble_hamiltonian(&space, &seg)?.to_dense();
    let jumps: Vec<_> = channels.iter().map(|c| (c.jump.to_dense(), c.rate)).collect();
    let n = space.total_dim();
    let propagator = (liouvillian(&h, &jumps) * C64::from(seg.duration)).exp();
    let v = propagator * DMatrix::from_column_slice(n * n, 1, rho0.data().as_slice());
    let exact = DensityMatrix::from_matrix(&space, DMatrix::from_column_slice(n, n, v.as_slice()));

    let diff = run.final_state.data() - exact.data();
    let trace_distance = 0.5 * diff.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>();
    println!("dimension            {n}");
    println!("accepted steps       {}", run.diagnostics.steps.accepted);
    println!("trace distance       {trace_distance:.3e}");
    Ok(())
}
