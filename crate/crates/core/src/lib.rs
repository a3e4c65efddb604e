//! Hybrid quantum-classical crack classifier.
//!
//! A classical feature vector is squeezed to `Q` values by a linear layer,
//! loaded into a `Q`-qubit variational circuit as rotation angles, measured
//! as per-wire `<Z>` and mapped to two class logits by a second linear layer.
//! The circuit is simulated exactly ([`statevector`]) and differentiated by
//! backprop, finite differences or the parameter-shift rule ([`autodiff`]),
//! with every simulated circuit execution booked in a [`CallLedger`].

pub mod autodiff;
pub mod circuit;
pub mod data;
mod error;
pub mod io;
pub mod model;
pub mod optim;
pub mod rng;
pub mod statevector;

pub use autodiff::{
    jacobian, ledger_predict, ledger_reconcile, CallCounts, CallLedger, FdVariant, GradMethod,
    LedgerContext, LedgerPrediction, LedgerRecord, QNodeJacobian, ReconcileReport,
};
pub use circuit::{
    build_circuit, describe, encode_features, evaluate, evaluate_batch, CircuitSpec, EvalMode,
    QNodeInput, QNodeOutput,
};
pub use data::{Label, Patch, Sample, SplitConfig, Splits};
pub use error::{Error, Result};
pub use model::{EpochMetrics, HybridModel, LinearLayer, TrainConfig, TrainOutcome};
pub use optim::{Adam, OptimizerState};
pub use statevector::{BlochCoords, Gate, ShotCounts, StateVector};
