mod common;

use qcrack::model::train;
use qcrack::{
    jacobian, ledger_predict, ledger_reconcile, CallCounts, CallLedger, CircuitSpec, EvalMode,
    GradMethod, HybridModel, Label, QNodeInput, Sample, TrainConfig,
};

fn samples(n: usize, offset: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| Sample {
            id: format!("x{}", i + offset),
            label: Label::from_index(i % 2).unwrap(),
            features: vec![0.1 * i as f64, -0.2, 0.05 * (i + offset) as f64],
        })
        .collect()
}

fn methods() -> [GradMethod; 4] {
    [
        GradMethod::Backprop,
        GradMethod::finite_diff(),
        GradMethod::central_diff(1e-3),
        GradMethod::param_shift(),
    ]
}

#[test]
fn measured_epochs_match_prediction() {
    for t in [1, 5, 20] {
        for v in [1, 5, 20] {
            let (train_set, val_set) = (samples(t, 0), samples(v, 1000));
            for depth in 1..=6 {
                for q in 1..=4 {
                    let spec = CircuitSpec::new(q, depth).unwrap();
                    for method in methods() {
                        let model = HybridModel::new(3, spec.clone(), 0).unwrap();
                        let cfg = TrainConfig {
                            epochs: 1,
                            method,
                            ..TrainConfig::default()
                        };
                        let out = train(model, &train_set, &val_set, &cfg).unwrap();
                        let p =
                            ledger_predict(t as u64, v as u64, depth as u64 + 1, q as u64, &method);
                        assert_eq!(
                            (out.ledger.n_forward, out.ledger.n_backward),
                            (p.n_forward, p.n_backward),
                            "T={t} V={v} depth={depth} Q={q} {}",
                            method.name()
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn backward_calls_scale_linearly_with_depth() {
    let t = 7;
    let train_set = samples(t, 0);
    for depth in 1..=6u64 {
        let spec = CircuitSpec::new(4, depth as usize).unwrap();
        let model = HybridModel::new(3, spec, 1).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            method: GradMethod::param_shift(),
            ..TrainConfig::default()
        };
        let out = train(model, &train_set, &[], &cfg).unwrap();
        assert_eq!(out.ledger.n_backward, 2 * t as u64 * (depth + 1) * 4);
    }
}

#[test]
fn skipped_image_fails_reconciliation() {
    let spec = CircuitSpec::default();
    let input = QNodeInput {
        features: vec![0.1; 4],
        params: vec![0.2; 4],
    };
    let method = GradMethod::param_shift();
    let ledger = CallLedger::default();
    for _ in 0..4 {
        jacobian(&spec, &input, method, EvalMode::Exact, &ledger).unwrap();
    }
    let predicted = ledger_predict(5, 0, 2, 4, &method);
    let err = ledger_reconcile(ledger.counts(), predicted).unwrap_err();
    match err {
        qcrack::Error::Reconcile(report) => assert_eq!(report.shortfall(), 2 * 2 * 4 + 1),
        other => panic!("unexpected {other}"),
    }
    assert!(ledger_reconcile(CallCounts::default(), ledger_predict(0, 0, 2, 4, &method)).is_ok());
}
