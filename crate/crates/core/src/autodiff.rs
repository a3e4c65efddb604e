//! Gradients of the quantum node and device-call accounting.
//!
//! Every method differentiates with respect to all `L·Q` rotation angles:
//! the `Q` encoding angles first, then the `q_depth·Q` trainable parameters.
//!
//! Call accounting per [`jacobian`] invocation:
//!
//! | method              | n_forward | n_backward |
//! |---------------------|-----------|------------|
//! | backprop            | 1         | 0          |
//! | finite-diff forward | 1         | L·Q        |
//! | finite-diff central | 1         | 2·L·Q      |
//! | param-shift         | 1         | 2·L·Q      |

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::circuit::{
    circuit_with_slots, encode_features, evaluate_angles, measure, CircuitSpec, EvalMode,
    QNodeInput,
};
use crate::error::{Error, Result};
use crate::statevector::{ry_derivative, Complex, Gate, StateVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdVariant {
    #[default]
    Forward,
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GradMethod {
    Backprop,
    FiniteDiff {
        #[serde(default = "default_fd_step")]
        step: f64,
        #[serde(default)]
        variant: FdVariant,
    },
    ParamShift {
        #[serde(default = "default_shift")]
        shift: f64,
        #[serde(default = "default_coeff")]
        coeff: f64,
    },
}

fn default_fd_step() -> f64 {
    1e-4
}

fn default_shift() -> f64 {
    FRAC_PI_2
}

fn default_coeff() -> f64 {
    0.5
}

impl Default for GradMethod {
    fn default() -> Self {
        Self::param_shift()
    }
}

impl GradMethod {
    pub fn finite_diff() -> Self {
        GradMethod::FiniteDiff {
            step: default_fd_step(),
            variant: FdVariant::Forward,
        }
    }

    pub fn central_diff(step: f64) -> Self {
        GradMethod::FiniteDiff {
            step,
            variant: FdVariant::Central,
        }
    }

    pub fn param_shift() -> Self {
        GradMethod::ParamShift {
            shift: default_shift(),
            coeff: default_coeff(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GradMethod::Backprop => "backprop",
            GradMethod::FiniteDiff { .. } => "finite-diff",
            GradMethod::ParamShift { .. } => "param-shift",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GradMethod::Backprop => Ok(()),
            GradMethod::FiniteDiff { step, .. } => {
                if step > 0.0 && step.is_finite() {
                    Ok(())
                } else {
                    Err(Error::arg(format!(
                        "finite-difference step {step} must be > 0"
                    )))
                }
            }
            GradMethod::ParamShift { shift, coeff } => {
                if !(shift > 0.0 && shift <= std::f64::consts::PI) {
                    Err(Error::arg(format!("shift {shift} must lie in (0, pi]")))
                } else if !(coeff > 0.0 && coeff.is_finite()) {
                    Err(Error::arg(format!("shift coefficient {coeff} must be > 0")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Extra circuit executions per differentiated sample.
    pub fn backward_calls(&self, layers: u64, qubits: u64) -> u64 {
        match self {
            GradMethod::Backprop => 0,
            GradMethod::FiniteDiff {
                variant: FdVariant::Forward,
                ..
            } => layers * qubits,
            GradMethod::FiniteDiff {
                variant: FdVariant::Central,
                ..
            }
            | GradMethod::ParamShift { .. } => 2 * layers * qubits,
        }
    }
}

/// Sizes an epoch's call counts depend on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerContext {
    pub train: u64,
    pub val: u64,
    pub layers: u64,
    pub qubits: u64,
}

/// Thread-safe circuit-execution counter.
#[derive(Debug, Default)]
pub struct CallLedger {
    forward: AtomicU64,
    backward: AtomicU64,
    context: LedgerContext,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub n_forward: u64,
    pub n_backward: u64,
}

impl CallCounts {
    pub fn n_calls(&self) -> u64 {
        self.n_forward + self.n_backward
    }
}

impl std::ops::Add for CallCounts {
    type Output = CallCounts;

    fn add(self, rhs: Self) -> Self {
        CallCounts {
            n_forward: self.n_forward + rhs.n_forward,
            n_backward: self.n_backward + rhs.n_backward,
        }
    }
}

impl CallLedger {
    pub fn new(context: LedgerContext) -> Self {
        Self {
            context,
            ..Self::default()
        }
    }

    pub fn context(&self) -> LedgerContext {
        self.context
    }

    pub fn record_forward(&self, n: u64) {
        self.forward.fetch_add(n, Ordering::Relaxed);
    }

    pub fn record_backward(&self, n: u64) {
        self.backward.fetch_add(n, Ordering::Relaxed);
    }

    pub fn n_forward(&self) -> u64 {
        self.forward.load(Ordering::Relaxed)
    }

    pub fn n_backward(&self) -> u64 {
        self.backward.load(Ordering::Relaxed)
    }

    pub fn n_calls(&self) -> u64 {
        self.counts().n_calls()
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            n_forward: self.n_forward(),
            n_backward: self.n_backward(),
        }
    }

    pub fn absorb(&self, counts: CallCounts) {
        self.record_forward(counts.n_forward);
        self.record_backward(counts.n_backward);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNodeJacobian {
    /// `<Z_k>` at the unshifted point.
    pub value: Vec<f64>,
    /// `∂<Z_k>/∂θ_j`, one row per output wire.
    pub d_params: Vec<Vec<f64>>,
    /// `∂<Z_k>/∂angle_i` with respect to the encoded angles.
    pub d_inputs: Vec<Vec<f64>>,
}

impl QNodeJacobian {
    fn from_columns(value: Vec<f64>, spec: &CircuitSpec, columns: Vec<Vec<f64>>) -> Self {
        let q = spec.num_qubits;
        let rows = |range: std::ops::Range<usize>| -> Vec<Vec<f64>> {
            (0..q)
                .map(|k| range.clone().map(|j| columns[j][k]).collect())
                .collect()
        };
        Self {
            d_inputs: rows(0..q),
            d_params: rows(q..spec.num_shiftable()),
            value,
        }
    }

    /// Largest absolute elementwise difference across both blocks.
    pub fn max_abs_diff(&self, other: &QNodeJacobian) -> f64 {
        let block = |a: &[Vec<f64>], b: &[Vec<f64>]| {
            a.iter()
                .flatten()
                .zip(b.iter().flatten())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        block(&self.d_params, &other.d_params).max(block(&self.d_inputs, &other.d_inputs))
    }
}

pub fn jacobian(
    spec: &CircuitSpec,
    input: &QNodeInput,
    method: GradMethod,
    mode: EvalMode,
    ledger: &CallLedger,
) -> Result<QNodeJacobian> {
    method.validate()?;
    let angles = encode_features(&input.features)?;
    let slots = circuit_with_slots(spec, &angles, &input.params)?;
    match method {
        GradMethod::Backprop => {
            if !mode.is_exact() {
                return Err(Error::Capability(
                    "backprop needs exact statevector access, not shot sampling".into(),
                ));
            }
            let jac = adjoint(spec, &slots)?;
            ledger.record_forward(1);
            Ok(jac)
        }
        GradMethod::ParamShift { shift, coeff } => {
            let value = evaluate_angles(spec, &angles, &input.params, mode)?.z;
            ledger.record_forward(1);
            let columns = shifted_columns(spec, &angles, &input.params, mode, ledger, |f, j| {
                let plus = f(j, shift, 0)?;
                let minus = f(j, -shift, 1)?;
                Ok(plus
                    .iter()
                    .zip(&minus)
                    .map(|(p, m)| coeff * (p - m))
                    .collect())
            })?;
            Ok(QNodeJacobian::from_columns(value, spec, columns))
        }
        GradMethod::FiniteDiff { step, variant } => {
            let value = evaluate_angles(spec, &angles, &input.params, mode)?.z;
            ledger.record_forward(1);
            let columns = shifted_columns(spec, &angles, &input.params, mode, ledger, |f, j| {
                Ok(match variant {
                    FdVariant::Forward => f(j, step, 0)?
                        .iter()
                        .zip(&value)
                        .map(|(p, v)| (p - v) / step)
                        .collect(),
                    FdVariant::Central => {
                        let plus = f(j, step, 0)?;
                        let minus = f(j, -step, 1)?;
                        plus.iter()
                            .zip(&minus)
                            .map(|(p, m)| (p - m) / (2.0 * step))
                            .collect()
                    }
                })
            })?;
            Ok(QNodeJacobian::from_columns(value, spec, columns))
        }
    }
}

type ShiftedEval<'a> = dyn Fn(usize, f64, u64) -> Result<Vec<f64>> + 'a;

/// Runs `column(eval, j)` for every shiftable slot `j`, where `eval(j, delta, tag)`
/// executes the circuit with slot `j` moved by `delta` and books one backward call.
fn shifted_columns(
    spec: &CircuitSpec,
    angles: &[f64],
    params: &[f64],
    mode: EvalMode,
    ledger: &CallLedger,
    column: impl Fn(&ShiftedEval<'_>, usize) -> Result<Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    let q = spec.num_qubits;
    let eval = |j: usize, delta: f64, tag: u64| -> Result<Vec<f64>> {
        let mut a = angles.to_vec();
        let mut p = params.to_vec();
        if j < q {
            a[j] += delta;
        } else {
            p[j - q] += delta;
        }
        let out = evaluate_angles(spec, &a, &p, mode.derive(&[1, j as u64, tag]))?;
        ledger.record_backward(1);
        Ok(out.z)
    };
    (0..spec.num_shiftable())
        .map(|j| column(&eval, j))
        .collect()
}

/// Reverse-mode sweep over the statevector: one forward simulation, then the
/// gates are undone one at a time while `Z_k` co-states are carried back.
fn adjoint(spec: &CircuitSpec, slots: &[(Gate, Option<usize>)]) -> Result<QNodeJacobian> {
    let q = spec.num_qubits;
    let mut phi = StateVector::zero(q)?;
    for (gate, _) in slots {
        phi.apply(gate)?;
    }
    let value = measure(&phi, EvalMode::Exact)?.z;

    let mut lambdas: Vec<StateVector> = (0..q)
        .map(|k| {
            let mut l = phi.clone();
            l.apply_z(k);
            l
        })
        .collect();
    let mut columns = vec![vec![0.0; q]; spec.num_shiftable()];

    for (gate, slot) in slots.iter().rev() {
        let inverse = gate.inverse();
        phi.apply_unchecked(&inverse);
        if let (Some(slot), Some(theta)) = (slot, gate.angle()) {
            let mut mu = phi.clone();
            mu.apply_matrix(gate.target(), gate.control(), &ry_derivative(theta));
            for (k, lambda) in lambdas.iter().enumerate() {
                columns[*slot][k] = 2.0 * inner(lambda, &mu).re;
            }
        }
        for lambda in &mut lambdas {
            lambda.apply_unchecked(&inverse);
        }
    }
    Ok(QNodeJacobian::from_columns(value, spec, columns))
}

fn inner(a: &StateVector, b: &StateVector) -> Complex {
    a.amps()
        .iter()
        .zip(b.amps())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerPrediction {
    pub n_forward: u64,
    pub n_backward: u64,
}

impl LedgerPrediction {
    pub fn n_calls(&self) -> u64 {
        self.n_forward + self.n_backward
    }
}

/// Expected circuit executions for one epoch of `train` training and `val`
/// validation images.
pub fn ledger_predict(
    train: u64,
    val: u64,
    layers: u64,
    qubits: u64,
    method: &GradMethod,
) -> LedgerPrediction {
    LedgerPrediction {
        n_forward: train + val,
        n_backward: train * method.backward_calls(layers, qubits),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconcileReport {
    pub measured: CallCounts,
    pub predicted: LedgerPrediction,
}

impl ReconcileReport {
    pub fn passed(&self) -> bool {
        self.measured.n_forward == self.predicted.n_forward
            && self.measured.n_backward == self.predicted.n_backward
    }

    /// `predicted - measured` total calls.
    pub fn shortfall(&self) -> i64 {
        self.predicted.n_calls() as i64 - self.measured.n_calls() as i64
    }
}

impl fmt::Display for ReconcileReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "forward {} (predicted {}), backward {} (predicted {}), total {} (predicted {})",
            self.measured.n_forward,
            self.predicted.n_forward,
            self.measured.n_backward,
            self.predicted.n_backward,
            self.measured.n_calls(),
            self.predicted.n_calls()
        )
    }
}

pub fn ledger_reconcile(
    measured: CallCounts,
    predicted: LedgerPrediction,
) -> Result<ReconcileReport> {
    let report = ReconcileReport {
        measured,
        predicted,
    };
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::Reconcile(report))
    }
}

/// Per-epoch ledger export row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub epoch: usize,
    pub method: String,
    pub n_forward: u64,
    pub n_backward: u64,
    pub n_calls: u64,
    pub predicted: u64,
}
