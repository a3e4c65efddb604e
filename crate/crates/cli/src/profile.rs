//! Backend throughput figures and the runtime estimator.
//!
//! The estimate is an order-of-magnitude model, not a calibrated predictor:
//! `device_seconds = n_calls * shots * layers / clops` and
//! `wall_seconds = device_seconds * overhead_factor`, where the overhead
//! factor lumps queueing and transpilation into one multiplier.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendProfile {
    pub name: String,
    pub clops: f64,
    pub qv: u64,
    #[serde(default = "one")]
    pub overhead_factor: f64,
}

fn one() -> f64 {
    1.0
}

const BUILTIN: [(&str, &str); 3] = [
    ("kolkata", include_str!("../profiles/kolkata.json")),
    ("ehningen", include_str!("../profiles/ehningen.json")),
    ("lima", include_str!("../profiles/lima.json")),
];

impl BackendProfile {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.clops > 0.0 && self.clops.is_finite()) {
            return Err(CliError::usage(format!(
                "profile {}: clops must be > 0",
                self.name
            )));
        }
        if !(self.overhead_factor >= 1.0 && self.overhead_factor.is_finite()) {
            return Err(CliError::usage(format!(
                "profile {}: overhead_factor must be >= 1",
                self.name
            )));
        }
        Ok(())
    }

    pub fn builtin_names() -> Vec<&'static str> {
        BUILTIN.iter().map(|(n, _)| *n).collect()
    }

    /// A bundled profile by short name (`lima`) or full name (`ibmq_lima`),
    /// otherwise a JSON file path.
    pub fn resolve(name_or_path: &str) -> CliResult<Self> {
        let short = name_or_path.strip_prefix("ibmq_").unwrap_or(name_or_path);
        let profile: BackendProfile = match BUILTIN.iter().find(|(n, _)| *n == short) {
            Some((_, text)) => serde_json::from_str(text).expect("bundled profiles parse"),
            None => {
                let path = Path::new(name_or_path);
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::usage(format!(
                        "unknown profile {name_or_path:?} (built-in: {}): {e}",
                        Self::builtin_names().join(", ")
                    ))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
            }
        };
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub profile: BackendProfile,
    pub n_calls: u64,
    pub shots: u64,
    pub layers: u64,
    pub device_seconds: f64,
    pub wall_seconds: f64,
}

pub fn estimate(profile: &BackendProfile, n_calls: u64, shots: u64, layers: u64) -> Estimate {
    let device_seconds = (n_calls as f64) * (shots as f64) * (layers as f64) / profile.clops;
    Estimate {
        profile: profile.clone(),
        n_calls,
        shots,
        layers,
        device_seconds,
        wall_seconds: device_seconds * profile.overhead_factor,
    }
}
