mod common;

use common::random_qnode;
use qcrack::circuit::build_circuit;
use qcrack::statevector::{estimate_z_from_counts, sample};
use qcrack::{evaluate, EvalMode, StateVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn shot_estimates_converge_to_exact_expectations() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..10u64 {
        let (spec, input) = random_qnode(&mut rng, 4, 3);
        let exact = evaluate(&spec, &input, EvalMode::Exact).unwrap().z;
        let est = evaluate(
            &spec,
            &input,
            EvalMode::Shots {
                shots: 1_000_000,
                seed: trial,
            },
        )
        .unwrap()
        .z;
        for (e, s) in exact.iter().zip(&est) {
            assert!((e - s).abs() <= 0.005, "trial {trial}: {e} vs {s}");
        }
    }
}

#[test]
fn counts_and_mode_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (spec, input) = random_qnode(&mut rng, 3, 2);
    let mut state = StateVector::zero(spec.num_qubits).unwrap();
    state
        .apply_all(&build_circuit(&spec, &input).unwrap())
        .unwrap();
    let counts = sample(&state, 5000, 3).unwrap();
    assert_eq!(counts.counts().values().sum::<u64>(), 5000);
    for k in 0..spec.num_qubits {
        let z = estimate_z_from_counts(&counts, k).unwrap();
        assert!((z - state.z_expectation(k).unwrap()).abs() < 0.08);
    }
}
