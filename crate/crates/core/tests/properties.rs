//! Property tests over random open-system instances, driven by fixed ChaCha seeds.

mod common;

use common::*;
use proptest::{
    prelude::*,
    test_runner::{ Config, RngAlgorithm, TestCaseError, TestRng, TestRunner },
};
use rydmech::{
    dynamics::SolverOptions,
    physmodel::PhysicalParams,
    protocols::{ build_fock_protocol, build_superposition_protocol, run_protocol, ProtocolOptions },
};

fn runner(cases: u32, tag: u8) -> TestRunner {
    let config = Config { cases, failure_persistence: None, rng_algorithm: RngAlgorithm::ChaCha, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &[tag; 32]))
}

fn fail(msg: String) -> TestCaseError { TestCaseError::fail(msg) }

#[test]
fn adaptive_matches_dense_exponential() {
    runner(24, 1)
        .run(&any::<u64>(), |seed| {
            let d = oracle_distance(&random_instance(&mut rng(seed)));
            prop_assert!(d < 1e-7, "trace distance {d:e}");
            Ok(())
        })
        .unwrap();
}

#[test]
fn trace_hermiticity_positivity_preserved() {
    runner(24, 2).run(&any::<u64>(), |seed| check_state_invariants(&random_instance(&mut rng(seed))).map_err(fail)).unwrap();
}

#[test]
fn tolerance_halving_is_stable() {
    runner(16, 3)
        .run(&any::<u64>(), |seed| check_tolerance_halving(&random_instance(&mut rng(seed)), 1e-6).map_err(fail))
        .unwrap();
}

#[test]
fn truncation_robust_to_ten_more_levels() {
    runner(12, 4).run(&any::<u64>(), |seed| check_truncation(&mut rng(seed)).map(|_| ()).map_err(fail)).unwrap();
}

#[test]
fn shipped_cutoffs_are_converged() {
    for kind in ["fock", "superpose", "noon", "cool"] {
        check_protocol_truncation(kind).unwrap();
    }
}

#[test]
fn rwa_agrees_with_full_coupling_when_weak() {
    runner(6, 5)
        .run(&(1e-4..=1e-3f64, 0usize..3), |(ratio, m)| check_rwa_agreement(ratio, m).map(|_| ()).map_err(fail))
        .unwrap();
}

#[test]
fn superposition_invariant_under_faster_pulses() {
    let base = PhysicalParams::state_engineering();
    let fast = PhysicalParams { omega_l: 2.0 * base.omega_l, omega_r: 2.0 * base.omega_r, omega_mu: 2.0 * base.omega_mu, ..base.clone() };
    let fidelity = |p: &PhysicalParams| {
        let script = build_superposition_protocol(p, &ProtocolOptions::default()).unwrap();
        run_protocol(&script, &SolverOptions::default()).unwrap().summary.fidelity.unwrap()
    };
    let (a, b) = (fidelity(&base), fidelity(&fast));
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn ideal_fock_ladder_above_099() {
    let ideal = PhysicalParams { gamma_s: 0.0, gamma_p: 0.0, mech_damping: Some(0.0), ..PhysicalParams::state_engineering() };
    let mut last = 1.0;
    for m in 1..=4 {
        let script = build_fock_protocol(m, &ideal, &ProtocolOptions::default()).unwrap();
        let f = run_protocol(&script, &SolverOptions::default()).unwrap().summary.fidelity.unwrap();
        assert!(f > 0.99, "m = {m}: {f}");
        assert!(f <= last + 1e-9, "m = {m}: {f} above m−1 value {last}");
        last = f;
    }
}
