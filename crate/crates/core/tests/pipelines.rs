use qsim_core::dynamics::{
    self, adiabatic_run, default_initial_hamiltonian, round_trip_check, AdiabaticSchedule,
    Hamiltonian, LocalHamiltonian, ProblemHamiltonian,
};
use qsim_core::oracles::{ClassicalFunction, OracleUnitary};
use qsim_core::qec::{self, CodeKind, CodeSpec, NoiseEvent, NoiseKind, SyndromeMethod};
use qsim_core::querylib;
use qsim_core::shor::{self, FactorOutcome, ShorOptions};
use qsim_core::{Circuit, GateMatrix, RngStream, SimError, StateVector};

#[test]
fn truth_table_file_round_trip_drives_simon() {
    let mut rng = RngStream::new(11);
    let f = ClassicalFunction::simon(5, 0b10110, &mut rng).unwrap();
    let parsed = ClassicalFunction::parse_truth_table(&f.to_truth_table()).unwrap();
    assert_eq!(parsed, f);
    let out = querylib::simon(&parsed, &mut rng).unwrap();
    assert_eq!(out.period, 0b10110);
}

#[test]
fn oracle_is_an_involution() {
    let mut rng = RngStream::new(3);
    let f = ClassicalFunction::random_balanced(3, &mut rng).unwrap();
    let u = OracleUnitary::standard(f);
    let psi = StateVector::random(u.n_qubits(), &mut rng).unwrap();
    let mut s = psi.clone();
    u.apply(&mut s).unwrap();
    u.apply(&mut s).unwrap();
    assert!(s.max_abs_diff(&psi) < 1e-15);
}

#[test]
fn circuit_then_inverse_is_identity() {
    let mut rng = RngStream::new(8);
    let mut c = Circuit::new(4);
    for _ in 0..30 {
        let arity = 1 + rng.below(3) as usize;
        let mut qs = vec![0, 1, 2, 3];
        rng.shuffle(&mut qs);
        c.gate(GateMatrix::random_unitary(arity, &mut rng).unwrap(), &qs[..arity]).unwrap();
    }
    let psi = StateVector::random(4, &mut rng).unwrap();
    let mut s = psi.clone();
    c.apply_unitary(&mut s).unwrap();
    c.inverse().unwrap().apply_unitary(&mut s).unwrap();
    assert!(s.max_abs_diff(&psi) < 1e-12);
}

#[test]
fn seeded_factoring_is_reproducible() {
    let run = |seed| shor::shor_factor(21, &mut RngStream::new(seed), &ShorOptions::default()).unwrap();
    assert_eq!(run(5), run(5));
    match run(5) {
        FactorOutcome::Factor(r) => assert!(r.factor == 3 || r.factor == 7),
        other => panic!("{other:?}"),
    }
}

#[test]
fn hamiltonian_text_round_trip_preserves_dynamics() {
    let h = LocalHamiltonian::heisenberg_chain(4, 0.8, 0.3).unwrap();
    let back = LocalHamiltonian::parse(&h.to_text()).unwrap();
    let psi = StateVector::random(4, &mut RngStream::new(2)).unwrap();
    let a = dynamics::exact_evolve(&h, 0.7, &psi).unwrap();
    let b = dynamics::exact_evolve(&back, 0.7, &psi).unwrap();
    assert!(dynamics::state_distance(&a, &b) < 1e-12);
}

#[test]
fn adiabatic_from_cost_file() {
    let costs = ProblemHamiltonian::parse("# costs\n3\n1\n0\n2\n").unwrap();
    assert_eq!(costs.ground_states(), vec![2]);
    let h0 = Hamiltonian::Local(default_initial_hamiltonian(2).unwrap());
    let ht = Hamiltonian::Diagonal(costs);
    let sched = AdiabaticSchedule::new(40.0).unwrap();
    assert!(adiabatic_run(&h0, &ht, &sched).unwrap().success_prob > 0.95);
    assert!(round_trip_check(&h0, &ht, &sched).unwrap() > 0.9);
}

#[test]
fn every_code_corrects_every_single_bit_flip_end_to_end() {
    let mut rng = RngStream::new(21);
    let logical = StateVector::random(1, &mut rng).unwrap();
    for kind in CodeKind::ALL {
        let code = CodeSpec::new(kind).unwrap();
        for q in 0..code.n_physical() {
            let ev = NoiseEvent::new(NoiseKind::BitFlip, q);
            for method in [SyndromeMethod::AncillaCircuit, SyndromeMethod::Projector] {
                let out = qec::protect(&code, &logical, Some(&ev), method, &mut rng).unwrap();
                assert!(out.logical_fidelity > 1.0 - 1e-9, "{kind} q={q}");
            }
        }
    }
}

#[test]
fn noise_outside_block_is_rejected() {
    let code = CodeSpec::new(CodeKind::Steane7).unwrap();
    let logical = StateVector::new_basis_state(1, 0).unwrap();
    let ev = NoiseEvent::new(NoiseKind::PhaseFlip, 7);
    let err = qec::protect(&code, &logical, Some(&ev), SyndromeMethod::Projector, &mut RngStream::new(1));
    assert!(matches!(err, Err(SimError::IndexOutOfRange { .. })));
}
