use super::*;
use proptest::prelude::*;

fn space(levels: &[&str], cutoffs: &[usize]) -> Arc<CompositeSpace> {
    CompositeSpace::shared(levels, cutoffs).unwrap()
}

fn c(re: f64) -> C64 { C64::new(re, 0.0) }

#[test]
fn space_dimensions() {
    assert_eq!(space(&["g", "e", "s", "p"], &[15]).total_dim(), 60);
    assert_eq!(space(&["g", "s", "p1", "p2"], &[4, 4]).total_dim(), 64);
    assert_eq!(CompositeSpace::new(&["g"], &[4]), Err(HilbertError::DegenerateAtom(1)));
    assert_eq!(
        CompositeSpace::new(&["g", "g"], &[4]),
        Err(HilbertError::DuplicateLevel("g".into()))
    );
    assert_eq!(
        CompositeSpace::new(&["g", "e"], &[4, 1]),
        Err(HilbertError::DegenerateMode { mode: 1, cutoff: 1 })
    );
}

#[test]
fn index_roundtrip_and_order() {
    let s = space(&["g", "s", "p1", "p2"], &[3, 4]);
    assert_eq!(s.index(0, &[0, 1]), 1);
    assert_eq!(s.index(0, &[1, 0]), 4);
    assert_eq!(s.index(1, &[0, 0]), 12);
    for i in 0..s.total_dim() {
        let (a, occ) = s.decompose(i);
        assert_eq!(s.index(a, &occ), i);
    }
    assert_eq!(s.ket_label(s.index(2, &[1, 0])), "|p1,1,0⟩");
}

#[test]
fn ladder_matrix_elements() {
    let s = space(&["g", "e"], &[3]);
    let b = Operator::annihilation(&s, 0).unwrap();
    let local = b.to_dense().view((0, 0), (3, 3)).into_owned();
    assert_eq!(local[(0, 1)], c(1.0));
    assert!((local[(1, 2)] - c(2f64.sqrt())).norm() < 1e-15);
    assert_eq!(local.iter().filter(|z| z.norm() > 0.0).count(), 2);

    let two = StateVector::fock(&s, "g", &[2]).unwrap();
    let out = b.apply(&two).unwrap();
    let one = StateVector::fock(&s, "g", &[1]).unwrap();
    assert!((out.inner(&one).unwrap() - c(2f64.sqrt())).norm() < 1e-15);
    assert!((out.norm() - 2f64.sqrt()).abs() < 1e-15);
    assert!(matches!(Operator::annihilation(&s, 1), Err(HilbertError::BadMode { .. })));
}

#[test]
fn commutator_is_identity_below_cutoff() {
    let s = space(&["g", "e"], &[6, 3]);
    for mode in 0..2 {
        let b = Operator::annihilation(&s, mode).unwrap();
        let comm = b.commutator(&b.dagger()).to_dense();
        let n = s.phonon_cutoffs()[mode];
        for i in 0..s.total_dim() {
            let (_, occ) = s.decompose(i);
            for j in 0..s.total_dim() {
                let (_, occ_j) = s.decompose(j);
                if occ[mode] >= n - 1 || occ_j[mode] >= n - 1 {
                    continue;
                }
                let expect = if i == j { c(1.0) } else { c(0.0) };
                assert!((comm[(i, j)] - expect).norm() < 1e-12);
            }
        }
    }
}

/// Mean of the geometric distribution truncated to m < n, in closed form.
fn truncated_geometric_mean(n_th: f64, n: usize) -> f64 {
    let r = n_th / (n_th + 1.0);
    let rn = r.powi(n as i32);
    r / (1.0 - r) - n as f64 * rn / (1.0 - rn)
}

#[test]
fn thermal_state_mean_and_ground_population() {
    let s = space(&["g", "e"], &[60]);
    let rho = DensityMatrix::thermal(&s, "g", &[3.13]).unwrap();
    let n_op = Operator::number(&s, 0).unwrap();
    let mean = rho.expectation(&n_op).unwrap().re;
    let oracle = truncated_geometric_mean(3.13, 60);
    assert!((mean - oracle).abs() < 1e-10, "{mean} vs {oracle}");
    assert!((mean - 3.13).abs() < 1e-4);
    let p0 = rho.data()[(0, 0)].re;
    assert!((p0 - 1.0 / 4.13).abs() < 1e-6);
    assert!((p0 - 0.2421).abs() < 1e-4);
    rho.validate().unwrap();
}

#[test]
fn thermal_state_rejects_heavy_tail() {
    let s = space(&["g", "e"], &[5]);
    match DensityMatrix::thermal(&s, "g", &[3.13]) {
        Err(HilbertError::ThermalTail { required, tail, .. }) => {
            // tail = (3.13/4.13)^5
            assert!((tail - (3.13f64 / 4.13).powi(5)).abs() < 1e-12);
            assert!(thermal_tail_weight(3.13, required) < THERMAL_TAIL_TOL);
            assert!(thermal_tail_weight(3.13, required - 1) >= THERMAL_TAIL_TOL);
        }
        other => panic!("expected tail error, got {other:?}"),
    }
}

#[test]
fn zero_temperature_thermal_state_is_vacuum() {
    let s = space(&["g", "e"], &[4]);
    let rho = DensityMatrix::thermal(&s, "e", &[0.0]).unwrap();
    let vac = StateVector::fock(&s, "e", &[0]).unwrap().to_density();
    assert!((rho.data() - vac.data()).norm() < 1e-15);
}

#[test]
fn transition_operator_examples() {
    let s = space(&["g", "e", "s", "p"], &[3]);
    let gp = Operator::transition(&s, "g", "p").unwrap();
    let pg = Operator::transition(&s, "p", "g").unwrap();
    let gg = Operator::transition(&s, "g", "g").unwrap();
    assert!((&gp * &pg).matrix().max_abs_diff(gg.matrix()) < 1e-15);
    assert!(gp.dagger().matrix().max_abs_diff(pg.matrix()) == 0.0);

    let p0 = StateVector::fock(&s, "p", &[0]).unwrap();
    let g0 = StateVector::fock(&s, "g", &[0]).unwrap();
    assert!((gp.apply(&p0).unwrap().data() - g0.data()).norm() < 1e-15);

    let pp = Operator::transition(&s, "p", "p").unwrap();
    let rho = p0.to_density();
    assert!((rho.expectation(&pp).unwrap() - c(1.0)).norm() < 1e-15);
    assert!(matches!(Operator::transition(&s, "g", "x"), Err(HilbertError::UnknownLevel(_))));
}

#[test]
fn transition_algebra_exhaustive() {
    let labels = ["g", "s", "p"];
    let s = space(&labels, &[2]);
    for a in labels {
        for b in labels {
            for cc in labels {
                for d in labels {
                    let lhs = &Operator::transition(&s, a, b).unwrap() * &Operator::transition(&s, cc, d).unwrap();
                    let rhs = if b == cc {
                        Operator::transition(&s, a, d).unwrap()
                    } else {
                        Operator::zero(&s)
                    };
                    assert!(lhs.matrix().max_abs_diff(rhs.matrix()) < 1e-15, "σ{a}{b} σ{cc}{d}");
                }
            }
        }
    }
}

#[test]
fn partial_trace_examples() {
    let s = space(&["g", "e", "s", "p"], &[10]);
    let rho = StateVector::fock(&s, "p", &[0]).unwrap().to_density();
    let red = rho.partial_trace(&[Factor::Mode(0)]).unwrap();
    assert_eq!(red.dims(), &[10]);
    assert!((red.data()[(0, 0)] - c(1.0)).norm() < 1e-15);
    assert!((red.trace() - c(1.0)).norm() < 1e-10);

    // product state: thermal mode ⊗ |e⟩
    let th = DensityMatrix::thermal(&s, "e", &[0.2]).unwrap();
    let mode = th.partial_trace(&[Factor::Mode(0)]).unwrap();
    let dist = thermal_distribution(0.2, 10);
    for m in 0..10 {
        assert!((mode.data()[(m, m)].re - dist[m]).abs() < 1e-15);
    }
    let atom = th.partial_trace(&[Factor::Atom]).unwrap();
    assert!((atom.data()[(1, 1)] - c(1.0)).norm() < 1e-14);
}

#[test]
fn partial_trace_keeps_requested_mode_of_two() {
    let s = space(&["g", "s"], &[3, 3]);
    let psi = StateVector::superposition(
        &s,
        &[(c(1.0), "g", &[1, 0]), (c(1.0), "g", &[0, 1])],
    )
    .unwrap();
    let modes = psi.to_density().partial_trace(&[Factor::Mode(1), Factor::Mode(0)]).unwrap();
    assert_eq!(modes.factors(), &[Factor::Mode(0), Factor::Mode(1)]);
    assert!((modes.purity() - 1.0).abs() < 1e-12);
    let one = modes.partial_trace(&[Factor::Mode(0)]);
    assert!((one.entropy() - 2f64.ln()).abs() < 1e-12);
}

fn random_density(dim: usize, seed: &[f64]) -> DMatrix<C64> {
    let a = DMatrix::from_fn(dim, dim, |i, j| {
        let k = (i * dim + j) % seed.len();
        C64::new(seed[k], seed[(k + 1) % seed.len()] - 0.5)
    });
    let m = &a * a.adjoint();
    let tr = m.trace();
    m / tr
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

    #[test]
    fn lift_commutes_with_multiplication(
        vals in proptest::collection::vec(-1.0f64..1.0, 18),
    ) {
        let s = space(&["g", "s", "p"], &[3]);
        let a = CsrMatrix::from_dense(&DMatrix::from_fn(3, 3, |i, j| C64::new(vals[3 * i + j], vals[9 + 3 * i + j])));
        let b = CsrMatrix::from_dense(&DMatrix::from_fn(3, 3, |i, j| C64::new(vals[3 * j + i], -vals[9 + i])));
        for f in [Factor::Atom, Factor::Mode(0)] {
            let la = Operator::lift(&s, f, &a).unwrap();
            let lb = Operator::lift(&s, f, &b).unwrap();
            let lab = Operator::lift(&s, f, &a.matmul(&b)).unwrap();
            prop_assert!((&la * &lb).matrix().max_abs_diff(lab.matrix()) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_preserves_trace_and_hermiticity(
        seed in proptest::collection::vec(0.0f64..1.0, 7),
    ) {
        let s = space(&["g", "s"], &[3, 2]);
        let rho = DensityMatrix::from_matrix(&s, random_density(s.total_dim(), &seed));
        for keep in [vec![Factor::Atom], vec![Factor::Mode(0)], vec![Factor::Mode(1), Factor::Atom]] {
            let red = rho.partial_trace(&keep).unwrap();
            prop_assert!((red.trace() - c(1.0)).norm() < 1e-10);
            prop_assert!(red.hermiticity_error() < 1e-10);
        }
    }
}
