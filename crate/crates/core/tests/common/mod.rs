#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use qcrack::{CircuitSpec, Gate, QNodeInput, StateVector};
use rand::Rng;

/// Dense `2^Q x 2^Q` unitary of `gate`, built from Kronecker products with
/// qubit 0 as the rightmost factor.
pub fn dense(gate: &Gate, q: usize) -> DMatrix<C> {
    let m = gate.target_matrix();
    let m = DMatrix::from_fn(2, 2, |r, c| m[r][c]);
    let id = DMatrix::<C>::identity(2, 2);
    let p0 = DMatrix::from_row_slice(
        2,
        2,
        &[
            C::new(1.0, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
        ],
    );
    let p1 = DMatrix::from_row_slice(
        2,
        2,
        &[
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
            C::new(1.0, 0.0),
        ],
    );
    let chain = |pick: &dyn Fn(usize) -> DMatrix<C>| {
        (0..q).rev().fold(DMatrix::<C>::identity(1, 1), |acc, k| {
            acc.kronecker(&pick(k))
        })
    };
    let t = gate.target();
    match gate.control() {
        None => chain(&|k| if k == t { m.clone() } else { id.clone() }),
        Some(c) => {
            let off = chain(&|k| if k == c { p0.clone() } else { id.clone() });
            let on = chain(&|k| {
                if k == c {
                    p1.clone()
                } else if k == t {
                    m.clone()
                } else {
                    id.clone()
                }
            });
            off + on
        }
    }
}

pub fn random_gate(rng: &mut impl Rng, q: usize) -> Gate {
    let target = rng.random_range(0..q);
    let theta = rng.random_range(-std::f64::consts::TAU..std::f64::consts::TAU);
    let kinds = if q == 1 { 3 } else { 5 };
    let kind = rng.random_range(0..kinds);
    let control = if q > 1 {
        (target + 1 + rng.random_range(0..q - 1)) % q
    } else {
        0
    };
    match kind {
        0 => Gate::X { target },
        1 => Gate::H { target },
        2 => Gate::Ry { target, theta },
        3 => Gate::Cx { control, target },
        _ => Gate::Cry {
            control,
            target,
            theta,
        },
    }
}

pub fn random_state(rng: &mut impl Rng, q: usize) -> StateVector {
    let mut amps: Vec<C> = (0..1 << q)
        .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps).unwrap()
}

pub fn random_qnode(
    rng: &mut impl Rng,
    max_qubits: usize,
    max_depth: usize,
) -> (CircuitSpec, QNodeInput) {
    let spec = CircuitSpec::new(
        rng.random_range(1..=max_qubits),
        rng.random_range(1..=max_depth),
    )
    .unwrap();
    let input = QNodeInput {
        features: (0..spec.num_qubits)
            .map(|_| rng.random_range(-2.0..2.0))
            .collect(),
        params: (0..spec.num_params())
            .map(|_| rng.random_range(-3.2..3.2))
            .collect(),
    };
    (spec, input)
}
