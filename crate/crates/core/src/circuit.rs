//! The variational circuit `U(x, θ)` and its evaluation.
//!
//! Gate order for `Q` wires and `q_depth` blocks:
//!
//! 1. `H` on every wire,
//! 2. `RY(angle_i)` on wire `i`, where `angle_i = (π/2)·tanh(x_i)`,
//! 3. `q_depth` times: a CX brick (`0→1, 2→3, …` then `1→2, 3→4, …`)
//!    followed by `RY(θ[layer][i])` on wire `i`,
//!
//! and every wire is measured in the Z basis. Parameters are stored
//! layer-major: `θ[layer * Q + wire]`.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{estimate_z_from_counts, sample, Gate, StateVector, DEFAULT_MAX_QUBITS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entanglement {
    #[default]
    #[serde(rename = "parallel-brick")]
    ParallelBrick,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputScaling {
    #[default]
    #[serde(rename = "tanh-halfpi")]
    TanhHalfPi,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitSpec {
    pub num_qubits: usize,
    pub q_depth: usize,
    pub entanglement: Entanglement,
    pub input_scaling: InputScaling,
}

impl Default for CircuitSpec {
    fn default() -> Self {
        Self {
            num_qubits: 4,
            q_depth: 1,
            entanglement: Entanglement::ParallelBrick,
            input_scaling: InputScaling::TanhHalfPi,
        }
    }
}

impl CircuitSpec {
    pub fn new(num_qubits: usize, q_depth: usize) -> Result<Self> {
        let spec = Self {
            num_qubits,
            q_depth,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::Capacity {
                requested: self.num_qubits,
                cap: DEFAULT_MAX_QUBITS,
            });
        }
        if self.q_depth == 0 {
            return Err(Error::arg("q_depth must be >= 1"));
        }
        Ok(())
    }

    /// Encoding layer plus variational layers.
    pub fn layers(&self) -> usize {
        self.q_depth + 1
    }

    pub fn num_params(&self) -> usize {
        self.q_depth * self.num_qubits
    }

    /// Number of rotation angles a shift-based method must perturb.
    pub fn num_shiftable(&self) -> usize {
        self.layers() * self.num_qubits
    }

    pub fn gate_count(&self) -> usize {
        2 * self.num_qubits + self.q_depth * (2 * self.num_qubits - 1)
    }

    fn check_lengths(&self, angles: usize, params: usize) -> Result<()> {
        self.validate()?;
        if angles != self.num_qubits {
            return Err(Error::arg(format!(
                "expected {} features, got {angles}",
                self.num_qubits
            )));
        }
        if params != self.num_params() {
            return Err(Error::arg(format!(
                "expected {} parameters, got {params}",
                self.num_params()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNodeInput {
    /// Raw features, before angle scaling.
    pub features: Vec<f64>,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNodeOutput {
    pub z: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EvalMode {
    #[default]
    Exact,
    Shots {
        shots: u64,
        seed: u64,
    },
}

impl EvalMode {
    pub fn is_exact(&self) -> bool {
        matches!(self, EvalMode::Exact)
    }

    /// Same mode with an independent seed for sub-evaluation `path`.
    pub fn derive(&self, path: &[u64]) -> EvalMode {
        match *self {
            EvalMode::Exact => EvalMode::Exact,
            EvalMode::Shots { shots, seed } => EvalMode::Shots {
                shots,
                seed: crate::rng::derive_seed(seed, path),
            },
        }
    }
}

pub fn encode_value(x: f64) -> f64 {
    FRAC_PI_2 * x.tanh()
}

/// d(angle)/dx of [`encode_value`].
pub fn encode_derivative(x: f64) -> f64 {
    let t = x.tanh();
    FRAC_PI_2 * (1.0 - t * t)
}

pub fn encode_features(x: &[f64]) -> Result<Vec<f64>> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.is_nan() {
                Err(Error::data(format!("feature {i} is NaN")))
            } else {
                Ok(encode_value(v))
            }
        })
        .collect()
}

/// Gate sequence with, for every rotation, its slot in the shiftable-angle
/// vector `[encoding angles (Q), θ (q_depth·Q)]`.
pub(crate) fn circuit_with_slots(
    spec: &CircuitSpec,
    angles: &[f64],
    params: &[f64],
) -> Result<Vec<(Gate, Option<usize>)>> {
    spec.check_lengths(angles.len(), params.len())?;
    let q = spec.num_qubits;
    let mut gates = Vec::with_capacity(spec.gate_count());
    gates.extend((0..q).map(|target| (Gate::H { target }, None)));
    gates.extend(
        angles
            .iter()
            .enumerate()
            .map(|(target, &theta)| (Gate::Ry { target, theta }, Some(target))),
    );
    for layer in 0..spec.q_depth {
        for start in [0, 1] {
            gates.extend((start..q.saturating_sub(1)).step_by(2).map(|c| {
                (
                    Gate::Cx {
                        control: c,
                        target: c + 1,
                    },
                    None,
                )
            }));
        }
        for target in 0..q {
            let slot = layer * q + target;
            gates.push((
                Gate::Ry {
                    target,
                    theta: params[slot],
                },
                Some(q + slot),
            ));
        }
    }
    debug_assert_eq!(gates.len(), spec.gate_count());
    Ok(gates)
}

pub fn build_from_angles(spec: &CircuitSpec, angles: &[f64], params: &[f64]) -> Result<Vec<Gate>> {
    Ok(circuit_with_slots(spec, angles, params)?
        .into_iter()
        .map(|(g, _)| g)
        .collect())
}

pub fn build_circuit(spec: &CircuitSpec, input: &QNodeInput) -> Result<Vec<Gate>> {
    spec.check_lengths(input.features.len(), input.params.len())?;
    build_from_angles(spec, &encode_features(&input.features)?, &input.params)
}

pub(crate) fn run_gates(spec: &CircuitSpec, gates: &[Gate]) -> Result<StateVector> {
    let mut state = StateVector::zero(spec.num_qubits)?;
    state.apply_all(gates)?;
    Ok(state)
}

pub(crate) fn measure(state: &StateVector, mode: EvalMode) -> Result<QNodeOutput> {
    let z = match mode {
        EvalMode::Exact => state.z_expectations(),
        EvalMode::Shots { shots, seed } => {
            let counts = sample(state, shots, seed)?;
            (0..state.num_qubits())
                .map(|q| estimate_z_from_counts(&counts, q))
                .collect::<Result<_>>()?
        }
    };
    Ok(QNodeOutput { z })
}

/// Evaluates the circuit from already-encoded angles.
pub fn evaluate_angles(
    spec: &CircuitSpec,
    angles: &[f64],
    params: &[f64],
    mode: EvalMode,
) -> Result<QNodeOutput> {
    let gates = build_from_angles(spec, angles, params)?;
    measure(&run_gates(spec, &gates)?, mode)
}

pub fn evaluate(spec: &CircuitSpec, input: &QNodeInput, mode: EvalMode) -> Result<QNodeOutput> {
    let gates = build_circuit(spec, input)?;
    measure(&run_gates(spec, &gates)?, mode)
}

pub fn evaluate_batch(
    spec: &CircuitSpec,
    inputs: &[QNodeInput],
    mode: EvalMode,
) -> Result<Vec<QNodeOutput>> {
    inputs
        .par_iter()
        .enumerate()
        .map(|(index, input)| {
            evaluate(spec, input, mode).map_err(|e| Error::Batch {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Human-readable gate listing, one gate per line.
pub fn describe(spec: &CircuitSpec, input: &QNodeInput) -> Result<String> {
    let gates = build_circuit(spec, input)?;
    let mut out = format!(
        "circuit: {} qubits, q_depth {}, {} layers, {} gates\n",
        spec.num_qubits,
        spec.q_depth,
        spec.layers(),
        gates.len()
    );
    for (i, g) in gates.iter().enumerate() {
        let _ = writeln!(out, "{i:>4}  {g}");
    }
    Ok(out)
}
