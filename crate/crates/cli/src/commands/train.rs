use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use qcrack::io::write_atomic;
use qcrack::model::{evaluate_test, metrics_csv, train, Checkpoint, TestReport};
use qcrack::{
    ledger_predict, CallCounts, EpochMetrics, GradMethod, HybridModel, LedgerRecord, Sample, Splits,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::{write_json, Globals};

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    /// backprop, finite-diff, central-diff or param-shift.
    #[arg(long)]
    pub method: Option<String>,
    /// Sample expectations with this many shots instead of exact simulation.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub q_depth: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub crack: usize,
    pub no_crack: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: ClassCounts,
    pub val: ClassCounts,
    pub test: ClassCounts,
}

impl SplitCounts {
    pub fn of(s: &Splits<Sample>) -> Self {
        let c = |v: &[Sample]| {
            let (crack, no_crack) = Splits::class_counts(v);
            ClassCounts { crack, no_crack }
        };
        Self {
            train: c(&s.train),
            val: c(&s.val),
            test: c(&s.test),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: RunConfig,
    pub method: String,
    pub split: SplitCounts,
    pub epochs: usize,
    pub final_epoch: Option<EpochMetrics>,
    pub test: Option<TestReport>,
    pub calls: CallCounts,
    pub n_calls: u64,
    pub predicted_calls_per_epoch: u64,
    pub wall_seconds: f64,
}

pub fn parse_method(name: &str) -> CliResult<GradMethod> {
    Ok(match name {
        "backprop" => GradMethod::Backprop,
        "finite-diff" => GradMethod::finite_diff(),
        "central-diff" => GradMethod::central_diff(1e-3),
        "param-shift" => GradMethod::param_shift(),
        other => {
            return Err(CliError::usage(format!(
                "unknown method {other:?} (backprop, finite-diff, central-diff, param-shift)"
            )))
        }
    })
}

/// Config file (or defaults) with command-line overrides applied, validated.
pub fn resolve_config(args: &TrainArgs, globals: &Globals) -> CliResult<RunConfig> {
    let mut cfg = match &globals.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = globals.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &globals.out {
        cfg.out_dir = Some(out.clone());
    }
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(m) = &args.method {
        cfg.method = parse_method(m)?;
    }
    if let Some(s) = args.shots {
        cfg.shots = Some(s);
    }
    if let Some(d) = args.q_depth {
        cfg.circuit.q_depth = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json_file(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

/// Runs a full experiment and writes its artifacts into `out_dir`:
/// `config.json`, `split.json`, `metrics.csv`, `ledger.json`,
/// `checkpoint.json` and `report.json`.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> CliResult<TrainReport> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::runtime(format!("{}: {e}", out_dir.display())))?;
    write_json_file(&out_dir.join("config.json"), cfg)?;

    let splits = cfg.splits()?;
    for w in &splits.warnings {
        log::warn!("{w}");
    }
    write_json_file(
        &out_dir.join("split.json"),
        &splits.record(&cfg.split_config()),
    )?;
    let width = splits
        .train
        .first()
        .map(|s| s.features.len())
        .ok_or_else(|| CliError::runtime("training split is empty"))?;

    let model = HybridModel::new(width, cfg.circuit.clone(), cfg.seed)?;
    let outcome = train(model, &splits.train, &splits.val, &cfg.train_config())?;
    write_atomic(
        &out_dir.join("metrics.csv"),
        metrics_csv(&outcome.metrics).as_bytes(),
    )?;
    write_json_file(&out_dir.join("ledger.json"), &outcome.records)?;

    let test = if splits.test.is_empty() {
        None
    } else {
        Some(evaluate_test(
            &outcome.model,
            &splits.test,
            cfg.test_mode(),
        )?)
    };
    let config_value = serde_json::to_value(cfg)?;
    Checkpoint {
        model: outcome.model,
        optimizer: outcome.optimizer,
        seed: cfg.seed,
        config: Some(config_value),
    }
    .save(&out_dir.join("checkpoint.json"))?;

    let predicted = ledger_predict(
        splits.train.len() as u64,
        splits.val.len() as u64,
        cfg.circuit.layers() as u64,
        cfg.circuit.num_qubits as u64,
        &cfg.method,
    );
    let report = TrainReport {
        config: cfg.clone(),
        method: cfg.method.name().to_string(),
        split: SplitCounts::of(&splits),
        epochs: cfg.epochs,
        final_epoch: outcome.metrics.last().cloned(),
        test,
        calls: outcome.ledger,
        n_calls: outcome.ledger.n_calls(),
        predicted_calls_per_epoch: predicted.n_calls(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_json_file(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

pub fn ledger_records(out_dir: &Path) -> CliResult<Vec<LedgerRecord>> {
    let path = out_dir.join("ledger.json");
    let text = fs::read_to_string(&path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn run(args: &TrainArgs, globals: &Globals, out: &mut dyn Write) -> CliResult<()> {
    let cfg = resolve_config(args, globals)?;
    let out_dir: PathBuf = cfg
        .out_dir
        .clone()
        .ok_or_else(|| CliError::usage("train needs --out <dir> or out_dir in the config"))?;
    let report = execute(&cfg, &out_dir)?;
    if globals.json {
        return write_json(out, &report);
    }
    let s = &report.split;
    writeln!(
        out,
        "split: train {}/{}  val {}/{}  test {}/{} (crack/no_crack)",
        s.train.crack, s.train.no_crack, s.val.crack, s.val.no_crack, s.test.crack, s.test.no_crack
    )?;
    if let Some(m) = &report.final_epoch {
        writeln!(
            out,
            "epoch {}: train loss {:.4} acc {:.4}",
            m.epoch, m.train_loss, m.train_acc
        )?;
    }
    match &report.test {
        Some(t) => writeln!(
            out,
            "test: loss {:.4} accuracy {:.4} (tp {} fp {} fn {} tn {})",
            t.loss, t.accuracy, t.confusion.tp, t.confusion.fp, t.confusion.fn_, t.confusion.tn
        )?,
        None => writeln!(out, "test: empty split")?,
    }
    writeln!(
        out,
        "calls: {} ({} forward, {} backward) via {}",
        report.n_calls, report.calls.n_forward, report.calls.n_backward, report.method
    )?;
    writeln!(out, "artifacts: {}", out_dir.display())?;
    Ok(())
}
