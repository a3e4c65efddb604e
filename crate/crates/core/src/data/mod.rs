//! Patches, labels and the feature-level samples the model trains on.

mod features;
mod pgm;
mod split;
mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use features::{
    export_features, extract_features, import_features, samples_from_patches, FeatureSource,
    FEATURE_DIM,
};
pub use pgm::{load_dataset, read_pgm, write_dataset, write_pgm};
pub use split::{split, SplitConfig, SplitRecord, Splits};
pub use synthetic::{generate_synthetic, synthesize, Synthetic};

pub const PATCH_SIZE: usize = 224;
pub const PATCH_PIXELS: usize = PATCH_SIZE * PATCH_SIZE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NoCrack,
    Crack,
}

impl Label {
    /// Class index: `no_crack = 0`, `crack = 1`.
    pub fn index(self) -> usize {
        match self {
            Label::NoCrack => 0,
            Label::Crack => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::NoCrack),
            1 => Some(Label::Crack),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NoCrack => "no_crack",
            Label::Crack => "crack",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "crack" | "1" => Ok(Label::Crack),
            "no_crack" | "0" => Ok(Label::NoCrack),
            other => Err(Error::data(format!("unknown label {other:?}"))),
        }
    }
}

/// A 224x224 8-bit grayscale patch, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub id: String,
    pub label: Label,
    pub pixels: Vec<u8>,
}

impl Patch {
    pub fn new(id: impl Into<String>, label: Label, pixels: Vec<u8>) -> crate::Result<Self> {
        let id = id.into();
        if pixels.len() != PATCH_PIXELS {
            return Err(Error::data(format!(
                "patch {id}: {} pixels, expected {PATCH_PIXELS}",
                pixels.len()
            )));
        }
        Ok(Self { id, label, pixels })
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * PATCH_SIZE + col]
    }
}

/// A labelled feature vector; the unit the model and the splitter work on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub label: Label,
    pub features: Vec<f64>,
}

pub trait Labeled {
    fn label(&self) -> Label;
    fn id(&self) -> &str;
}

impl Labeled for Patch {
    fn label(&self) -> Label {
        self.label
    }

    fn id(&self) -> &str {
        &self.id
    }
}

impl Labeled for Sample {
    fn label(&self) -> Label {
        self.label
    }

    fn id(&self) -> &str {
        &self.id
    }
}
