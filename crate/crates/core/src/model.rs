//! `linear(F→Q) → quantum node → linear(Q→2)` classifier and its training loop.
//!
//! Trainable parameters are flattened in this order for the optimiser:
//! pre-layer weights (row-major), pre-layer bias, circuit parameters
//! (layer-major), post-layer weights (row-major), post-layer bias.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{
    jacobian, ledger_predict, ledger_reconcile, CallCounts, CallLedger, GradMethod, LedgerContext,
    LedgerRecord,
};
use crate::circuit::{encode_derivative, evaluate, CircuitSpec, EvalMode, QNodeInput};
use crate::data::{Label, Sample};
use crate::error::{Error, Result};
use crate::optim::{adam_step, Adam, OptimizerState};
use crate::rng::{self, derive_seed, STREAM_INIT, STREAM_SHUFFLE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim x in_dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearLayer {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Uniform in `±1/sqrt(in_dim)`.
    pub fn random(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-bound..=bound)).collect() };
        let weights = draw(in_dim * out_dim);
        let bias = draw(out_dim);
        Self {
            in_dim,
            out_dim,
            weights,
            bias,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.in_dim == 0
            || self.weights.len() != self.in_dim * self.out_dim
            || self.bias.len() != self.out_dim
        {
            return Err(Error::arg(format!(
                "{name} layer: {}x{} with {} weights and {} biases",
                self.out_dim,
                self.in_dim,
                self.weights.len(),
                self.bias.len()
            )));
        }
        if self
            .weights
            .iter()
            .chain(&self.bias)
            .any(|v| !v.is_finite())
        {
            return Err(Error::data(format!("{name} layer has non-finite entries")));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub pre: LinearLayer,
    pub qspec: CircuitSpec,
    pub qparams: Vec<f64>,
    pub post: LinearLayer,
}

impl HybridModel {
    /// Seeded initialisation: linear layers uniform in `±1/sqrt(in_dim)`,
    /// circuit parameters uniform in `±0.1`.
    pub fn new(num_features: usize, qspec: CircuitSpec, seed: u64) -> Result<Self> {
        qspec.validate()?;
        if num_features == 0 {
            return Err(Error::arg("model needs at least one input feature"));
        }
        let mut rng = rng::stream(seed, STREAM_INIT);
        let q = qspec.num_qubits;
        let pre = LinearLayer::random(num_features, q, &mut rng);
        let qparams = (0..qspec.num_params())
            .map(|_| rng.random_range(-0.1..=0.1))
            .collect();
        let post = LinearLayer::random(q, 2, &mut rng);
        Ok(Self {
            pre,
            qspec,
            qparams,
            post,
        })
    }

    pub fn zeros(num_features: usize, qspec: CircuitSpec) -> Self {
        let q = qspec.num_qubits;
        Self {
            pre: LinearLayer::zeros(num_features, q),
            qparams: vec![0.0; qspec.num_params()],
            post: LinearLayer::zeros(q, 2),
            qspec,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.qspec.validate()?;
        self.pre.validate("pre")?;
        self.post.validate("post")?;
        let q = self.qspec.num_qubits;
        if self.pre.out_dim != q || self.post.in_dim != q || self.post.out_dim != 2 {
            return Err(Error::arg(format!(
                "layer shapes {}→{}, {}→{} do not fit {q} qubits",
                self.pre.in_dim, self.pre.out_dim, self.post.in_dim, self.post.out_dim
            )));
        }
        if self.qparams.len() != self.qspec.num_params() {
            return Err(Error::arg(format!(
                "{} circuit parameters, expected {}",
                self.qparams.len(),
                self.qspec.num_params()
            )));
        }
        Ok(())
    }

    pub fn num_features(&self) -> usize {
        self.pre.in_dim
    }

    pub fn num_params(&self) -> usize {
        self.pre.len() + self.qparams.len() + self.post.len()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend(&self.pre.weights);
        out.extend(&self.pre.bias);
        out.extend(&self.qparams);
        out.extend(&self.post.weights);
        out.extend(&self.post.bias);
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::arg(format!(
                "{} parameters, expected {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut rest = flat;
        for dst in [
            &mut self.pre.weights,
            &mut self.pre.bias,
            &mut self.qparams,
            &mut self.post.weights,
            &mut self.post.bias,
        ] {
            let (head, tail) = rest.split_at(dst.len());
            dst.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.pre.in_dim {
            return Err(Error::arg(format!(
                "{} features, model expects {}",
                features.len(),
                self.pre.in_dim
            )));
        }
        Ok(())
    }

    pub fn forward(&self, features: &[f64], mode: EvalMode) -> Result<[f64; 2]> {
        self.check_features(features)?;
        let input = QNodeInput {
            features: self.pre.forward(features),
            params: self.qparams.clone(),
        };
        let z = evaluate(&self.qspec, &input, mode)?.z;
        let logits = self.post.forward(&z);
        Ok([logits[0], logits[1]])
    }
}

pub fn forward(model: &HybridModel, features: &[f64], mode: EvalMode) -> Result<[f64; 2]> {
    model.forward(features, mode)
}

/// Mean softmax cross-entropy of `logits` against class `label`.
pub fn cross_entropy(logits: [f64; 2], label: Label) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[label.index()]
}

fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

/// Class with the larger logit; ties go to `no_crack`.
pub fn predict(logits: [f64; 2]) -> Label {
    if logits[1] > logits[0] {
        Label::Crack
    } else {
        Label::NoCrack
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// Gradient in [`HybridModel::params_flat`] order.
    pub grad: Vec<f64>,
    pub correct: usize,
}

/// Mean cross-entropy over `batch` and its gradient with respect to every
/// trainable parameter. Only quantum-node executions are booked in `ledger`.
/// Element `i` of the batch runs in `mode.derive(&[i])`.
pub fn loss_and_grad(
    model: &HybridModel,
    batch: &[&Sample],
    method: GradMethod,
    mode: EvalMode,
    ledger: &CallLedger,
) -> Result<LossGrad> {
    if batch.is_empty() {
        return Err(Error::arg("empty batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let q = model.qspec.num_qubits;
    let f = model.pre.in_dim;
    let mut grad = vec![0.0; model.num_params()];
    let (pre_w, rest) = grad.split_at_mut(model.pre.weights.len());
    let (pre_b, rest) = rest.split_at_mut(q);
    let (theta, rest) = rest.split_at_mut(model.qparams.len());
    let (post_w, post_b) = rest.split_at_mut(2 * q);

    let mut loss = 0.0;
    let mut correct = 0;
    for (i, sample) in batch.iter().enumerate() {
        model.check_features(&sample.features)?;
        let h = model.pre.forward(&sample.features);
        let input = QNodeInput {
            features: h.clone(),
            params: model.qparams.clone(),
        };
        let sample_mode = if batch.len() == 1 {
            mode
        } else {
            mode.derive(&[i as u64])
        };
        let jac = jacobian(&model.qspec, &input, method, sample_mode, ledger)?;
        let z = &jac.value;
        let logits = model.post.forward(z);
        let logits = [logits[0], logits[1]];
        loss += scale * cross_entropy(logits, sample.label);
        if predict(logits) == sample.label {
            correct += 1;
        }

        let p = softmax(logits);
        let y = sample.label.index();
        let delta = [
            scale * (p[0] - (y == 0) as u8 as f64),
            scale * (p[1] - (y == 1) as u8 as f64),
        ];
        let mut dz = vec![0.0; q];
        for (o, &d) in delta.iter().enumerate() {
            post_b[o] += d;
            for k in 0..q {
                post_w[o * q + k] += d * z[k];
                dz[k] += d * model.post.weights[o * q + k];
            }
        }
        for (k, &dzk) in dz.iter().enumerate() {
            for (j, t) in theta.iter_mut().enumerate() {
                *t += dzk * jac.d_params[k][j];
            }
        }
        for a in 0..q {
            let d_angle: f64 = (0..q).map(|k| dz[k] * jac.d_inputs[k][a]).sum();
            let dh = d_angle * encode_derivative(h[a]);
            pre_b[a] += dh;
            for (w, x) in pre_w[a * f..(a + 1) * f].iter_mut().zip(&sample.features) {
                *w += dh * x;
            }
        }
    }
    Ok(LossGrad {
        loss,
        grad,
        correct,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub method: GradMethod,
    pub seed: u64,
    pub mode: EvalMode,
    pub batch_size: usize,
    pub adam: Adam,
    /// When false, `elapsed_ms` is reported as 0 so metrics are byte-reproducible.
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            method: GradMethod::param_shift(),
            seed: 0,
            mode: EvalMode::Exact,
            batch_size: 1,
            adam: Adam::default(),
            record_timing: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
    pub n_calls: u64,
    pub elapsed_ms: u64,
}

pub const METRICS_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc,n_calls,elapsed_ms";

pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            m.epoch,
            m.train_loss,
            m.train_acc,
            opt(m.val_loss),
            opt(m.val_acc),
            m.n_calls,
            m.elapsed_ms
        );
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: HybridModel,
    pub optimizer: OptimizerState,
    pub metrics: Vec<EpochMetrics>,
    pub ledger: CallCounts,
    pub records: Vec<LedgerRecord>,
}

const TAG_TRAIN: u64 = 0;
const TAG_VAL: u64 = 1;

/// Per-sample Adam training with a validation pass after every epoch.
///
/// Each epoch shuffles the training split, takes one optimiser step per
/// `batch_size` samples (training metrics come from the forward values of
/// those steps), then runs one forward pass per validation sample. The
/// epoch's circuit calls are reconciled against [`ledger_predict`].
pub fn train(
    model: HybridModel,
    train_set: &[Sample],
    val_set: &[Sample],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    model.validate()?;
    config.method.validate()?;
    if train_set.is_empty() {
        return Err(Error::arg("training split is empty"));
    }
    if config.batch_size == 0 {
        return Err(Error::arg("batch_size must be >= 1"));
    }
    let train_ids: HashSet<&str> = train_set.iter().map(|s| s.id.as_str()).collect();
    if let Some(dup) = val_set.iter().find(|s| train_ids.contains(s.id.as_str())) {
        return Err(Error::arg(format!(
            "sample {} is in both train and val",
            dup.id
        )));
    }
    for s in train_set.iter().chain(val_set) {
        model.check_features(&s.features)?;
    }

    let mut model = model;
    let mut optimizer = OptimizerState::new(config.adam, model.num_params());
    let context = LedgerContext {
        train: train_set.len() as u64,
        val: val_set.len() as u64,
        layers: model.qspec.layers() as u64,
        qubits: model.qspec.num_qubits as u64,
    };
    let predicted = ledger_predict(
        context.train,
        context.val,
        context.layers,
        context.qubits,
        &config.method,
    );
    let mut metrics = Vec::with_capacity(config.epochs);
    let mut records = Vec::with_capacity(config.epochs);
    let mut total = CallCounts::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let ledger = CallLedger::new(context);
        let epoch_seed = derive_seed(config.seed, &[epoch as u64]);
        order.shuffle(&mut rng::stream(epoch_seed, STREAM_SHUFFLE));

        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let mode = config.mode.derive(&[epoch as u64, TAG_TRAIN, step as u64]);
            let lg = loss_and_grad(&model, &batch, config.method, mode, &ledger)?;
            loss_sum += lg.loss * batch.len() as f64;
            correct += lg.correct;
            let mut params = model.params_flat();
            adam_step(&mut params, &lg.grad, &mut optimizer)?;
            model.set_params_flat(&params)?;
        }

        let val: Vec<(f64, bool)> = val_set
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let mode = config.mode.derive(&[epoch as u64, TAG_VAL, i as u64]);
                let logits = model.forward(&s.features, mode)?;
                ledger.record_forward(1);
                Ok((cross_entropy(logits, s.label), predict(logits) == s.label))
            })
            .collect::<Result<_>>()?;
        let (val_loss, val_acc) = if val.is_empty() {
            (None, None)
        } else {
            let n = val.len() as f64;
            let loss: f64 = val.iter().map(|v| v.0).sum();
            let hits = val.iter().filter(|v| v.1).count();
            (Some(loss / n), Some(hits as f64 / n))
        };

        let counts = ledger.counts();
        ledger_reconcile(counts, predicted)?;
        total = total + counts;
        records.push(LedgerRecord {
            epoch,
            method: config.method.name().to_string(),
            n_forward: counts.n_forward,
            n_backward: counts.n_backward,
            n_calls: counts.n_calls(),
            predicted: predicted.n_calls(),
        });
        let n = train_set.len() as f64;
        metrics.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / n,
            train_acc: correct as f64 / n,
            val_loss,
            val_acc,
            n_calls: counts.n_calls(),
            elapsed_ms: if config.record_timing {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        });
        log::info!(
            "epoch {epoch}: train loss {:.4} acc {:.4}, {} calls",
            loss_sum / n,
            correct as f64 / n,
            counts.n_calls()
        );
    }

    Ok(TrainOutcome {
        model,
        optimizer,
        metrics,
        ledger: total,
        records,
    })
}

/// 2x2 confusion counts with `crack` as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn add(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Crack, Label::Crack) => self.tp += 1,
            (Label::NoCrack, Label::Crack) => self.fp += 1,
            (Label::Crack, Label::NoCrack) => self.fn_ += 1,
            (Label::NoCrack, Label::NoCrack) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub loss: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub misclassified: Vec<String>,
}

pub fn evaluate_test(
    model: &HybridModel,
    test_set: &[Sample],
    mode: EvalMode,
) -> Result<TestReport> {
    model.validate()?;
    if test_set.is_empty() {
        return Err(Error::arg("test split is empty"));
    }
    let results: Vec<[f64; 2]> = test_set
        .par_iter()
        .enumerate()
        .map(|(i, s)| model.forward(&s.features, mode.derive(&[i as u64])))
        .collect::<Result<_>>()?;
    let mut confusion = Confusion::default();
    let mut loss = 0.0;
    let mut misclassified = Vec::new();
    for (s, &logits) in test_set.iter().zip(&results) {
        let p = predict(logits);
        confusion.add(s.label, p);
        loss += cross_entropy(logits, s.label);
        if p != s.label {
            misclassified.push(s.id.clone());
        }
    }
    Ok(TestReport {
        loss: loss / test_set.len() as f64,
        accuracy: confusion.accuracy(),
        confusion,
        misclassified,
    })
}

/// Everything needed to resume or re-evaluate a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: HybridModel,
    pub optimizer: OptimizerState,
    pub seed: u64,
    /// The run configuration that produced this checkpoint, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        crate::io::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        ckpt.model.validate()?;
        Ok(ckpt)
    }
}
