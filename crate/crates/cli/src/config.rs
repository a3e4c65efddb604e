//! Run configuration: one JSON document, validated before any work starts.

use std::path::{Path, PathBuf};

use qcrack::data::{
    generate_synthetic, import_features, load_dataset, samples_from_patches, split,
};
use qcrack::rng::derive_seed;
use qcrack::{CircuitSpec, EvalMode, GradMethod, Sample, SplitConfig, Splits, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub circuit: CircuitSpec,
    pub method: GradMethod,
    pub epochs: usize,
    pub seed: u64,
    /// `None` runs exact statevector expectations.
    pub shots: Option<u64>,
    pub batch_size: usize,
    pub split: SplitRatios,
    pub data: DataSource,
    pub out_dir: Option<PathBuf>,
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            circuit: CircuitSpec::default(),
            method: GradMethod::param_shift(),
            epochs: 10,
            seed: 0,
            shots: None,
            batch_size: 1,
            split: SplitRatios::default(),
            data: DataSource::default(),
            out_dir: None,
            record_timing: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    /// Defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.15,
            test: 0.15,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    /// Generated patches run through the built-in feature extractor.
    Synthetic { n_crack: usize, n_clean: usize },
    /// PGM patches listed in a `filename,label` manifest.
    Dir { dir: PathBuf, manifest: PathBuf },
    /// Precomputed `id,label,f_0,...` rows.
    Features { path: PathBuf },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            n_crack: 175,
            n_clean: 175,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |e: qcrack::Error| CliError::usage(format!("config: {e}"));
        self.circuit.validate().map_err(bad)?;
        self.method.validate().map_err(bad)?;
        self.split_config().validate().map_err(bad)?;
        if self.batch_size == 0 {
            return Err(CliError::usage("config: batch_size must be >= 1"));
        }
        if self.shots == Some(0) {
            return Err(CliError::usage("config: shots must be >= 1"));
        }
        if self.shots.is_some() && self.method == GradMethod::Backprop {
            return Err(CliError::usage(
                "config: backprop needs exact simulation; drop `shots` or pick another method",
            ));
        }
        Ok(())
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            train: self.split.train,
            val: self.split.val,
            test: self.split.test,
            seed: self.split.seed.unwrap_or(self.seed),
        }
    }

    pub fn mode(&self) -> EvalMode {
        match self.shots {
            None => EvalMode::Exact,
            Some(shots) => EvalMode::Shots {
                shots,
                seed: derive_seed(self.seed, &[0x5307]),
            },
        }
    }

    /// Evaluation mode for the held-out split, independent of training draws.
    pub fn test_mode(&self) -> EvalMode {
        self.mode().derive(&[u64::MAX])
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            method: self.method,
            seed: self.seed,
            mode: self.mode(),
            batch_size: self.batch_size,
            record_timing: self.record_timing,
            ..TrainConfig::default()
        }
    }

    pub fn load_samples(&self) -> CliResult<Vec<Sample>> {
        self.data.load(self.seed)
    }

    pub fn splits(&self) -> CliResult<Splits<Sample>> {
        Ok(split(self.load_samples()?, &self.split_config())?)
    }
}

impl DataSource {
    pub fn load(&self, seed: u64) -> CliResult<Vec<Sample>> {
        let samples = match self {
            DataSource::Synthetic { n_crack, n_clean } => {
                samples_from_patches(&generate_synthetic(*n_crack, *n_clean, seed))
            }
            DataSource::Dir { dir, manifest } => {
                samples_from_patches(&load_dataset(dir, manifest)?)
            }
            DataSource::Features { path } => import_features(path)?,
        };
        Ok(samples)
    }
}
