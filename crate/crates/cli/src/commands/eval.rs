use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use qcrack::data::{import_features, load_dataset, samples_from_patches};
use qcrack::io::write_atomic;
use qcrack::model::{evaluate_test, Checkpoint, TestReport};
use qcrack::{EvalMode, Sample};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::{write_json, Globals};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Evaluate on a feature CSV instead of the checkpoint's own test split.
    #[arg(long, conflicts_with_all = ["data_dir", "manifest"])]
    pub features: Option<PathBuf>,
    /// Evaluate on PGM patches listed in --manifest.
    #[arg(long, requires = "manifest")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, requires = "data_dir")]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub checkpoint: PathBuf,
    pub source: String,
    pub n_samples: usize,
    #[serde(flatten)]
    pub test: TestReport,
    /// Run configuration stored in the checkpoint.
    pub config: Option<serde_json::Value>,
}

pub fn run(args: &EvalArgs, globals: &Globals, out: &mut dyn Write) -> CliResult<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let run_cfg = match (&globals.config, &ckpt.config) {
        (Some(path), _) => Some(RunConfig::load(path)?),
        (None, Some(v)) => Some(
            serde_json::from_value::<RunConfig>(v.clone())
                .map_err(|e| CliError::usage(format!("checkpoint config: {e}")))?,
        ),
        (None, None) => None,
    };
    let (source, samples): (String, Vec<Sample>) = if let Some(path) = &args.features {
        (
            format!("features:{}", path.display()),
            import_features(path)?,
        )
    } else if let (Some(dir), Some(manifest)) = (&args.data_dir, &args.manifest) {
        (
            format!("dir:{}", dir.display()),
            samples_from_patches(&load_dataset(dir, manifest)?),
        )
    } else {
        let cfg = run_cfg.as_ref().ok_or_else(|| {
            CliError::usage("checkpoint has no run config; pass --features or --data-dir")
        })?;
        ("test-split".to_string(), cfg.splits()?.test)
    };
    let width = ckpt.model.num_features();
    if let Some(bad) = samples.iter().find(|s| s.features.len() != width) {
        return Err(CliError::usage(format!(
            "sample {} has {} features, checkpoint expects {width}",
            bad.id,
            bad.features.len()
        )));
    }
    let mode = run_cfg
        .as_ref()
        .map_or(EvalMode::Exact, RunConfig::test_mode);
    let test = evaluate_test(&ckpt.model, &samples, mode)?;
    let report = EvalReport {
        checkpoint: args.checkpoint.clone(),
        source,
        n_samples: samples.len(),
        test,
        config: ckpt.config.clone(),
    };
    if let Some(dir) = &globals.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_atomic(&dir.join("eval_report.json"), text.as_bytes())?;
    }
    if globals.json {
        return write_json(out, &report);
    }
    let c = &report.test.confusion;
    writeln!(out, "{} samples from {}", report.n_samples, report.source)?;
    writeln!(
        out,
        "loss {:.6} accuracy {:.6}",
        report.test.loss, report.test.accuracy
    )?;
    writeln!(out, "              pred crack  pred no_crack")?;
    writeln!(out, "crack         {:>10}  {:>13}", c.tp, c.fn_)?;
    writeln!(out, "no_crack      {:>10}  {:>13}", c.fp, c.tn)?;
    if !report.test.misclassified.is_empty() {
        writeln!(
            out,
            "misclassified: {}",
            report.test.misclassified.join(" ")
        )?;
    }
    Ok(())
}
