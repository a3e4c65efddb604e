//! Stratified train/validation/test splitting.
//!
//! Each class is shuffled with the split seed and cut into contiguous runs
//! whose sizes come from largest-remainder rounding of `ratio · class size`.
//! Remainder ties go to the earlier split (train, then val, then test).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Label, Labeled};
use crate::error::{Error, Result};
use crate::rng::{self, STREAM_SPLIT};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(train: f64, val: f64, test: f64, seed: u64) -> Result<Self> {
        let c = Self {
            train,
            val,
            test,
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.ratios();
        if r.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::arg(format!("split ratios {r:?} must be >= 0")));
        }
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::arg(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn ratios(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
    /// Non-fatal notes, e.g. a split that rounded to zero items.
    pub warnings: Vec<String>,
}

/// Audit record of which ids landed where.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub seed: u64,
    pub ratios: [f64; 3],
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl<T: Labeled> Splits<T> {
    pub fn record(&self, config: &SplitConfig) -> SplitRecord {
        let ids = |v: &[T]| v.iter().map(|x| x.id().to_string()).collect();
        SplitRecord {
            seed: config.seed,
            ratios: config.ratios(),
            train: ids(&self.train),
            val: ids(&self.val),
            test: ids(&self.test),
        }
    }

    pub fn class_counts(items: &[T]) -> (usize, usize) {
        let crack = items.iter().filter(|x| x.label() == Label::Crack).count();
        (crack, items.len() - crack)
    }
}

/// Largest-remainder apportionment of `n` items over `ratios`.
pub(crate) fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    // stable sort keeps index order on equal remainders
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).expect("finite quotas")
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

pub fn split<T: Labeled>(items: Vec<T>, config: &SplitConfig) -> Result<Splits<T>> {
    config.validate()?;
    let mut out = Splits {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        warnings: Vec::new(),
    };
    let mut rng = rng::stream(config.seed, STREAM_SPLIT);
    let (mut cracks, mut clean): (Vec<T>, Vec<T>) =
        items.into_iter().partition(|x| x.label() == Label::Crack);
    for (label, class) in [(Label::Crack, &mut cracks), (Label::NoCrack, &mut clean)] {
        class.shuffle(&mut rng);
        let sizes = apportion(class.len(), config.ratios());
        for (name, (&size, &ratio)) in ["train", "val", "test"]
            .iter()
            .zip(sizes.iter().zip(config.ratios().iter()))
        {
            if size == 0 && ratio > 0.0 && !class.is_empty() {
                let msg = format!("{name} split has no {label} samples at ratio {ratio}");
                log::warn!("{msg}");
                out.warnings.push(msg);
            }
        }
        let mut rest = std::mem::take(class).into_iter();
        out.train.extend(rest.by_ref().take(sizes[0]));
        out.val.extend(rest.by_ref().take(sizes[1]));
        out.test.extend(rest);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn dataset(crack: usize, clean: usize) -> Vec<Sample> {
        (0..crack)
            .map(|i| (format!("c{i}"), Label::Crack))
            .chain((0..clean).map(|i| (format!("n{i}"), Label::NoCrack)))
            .map(|(id, label)| Sample {
                id,
                label,
                features: vec![],
            })
            .collect()
    }

    fn counts(s: &Splits<Sample>) -> [(usize, usize); 3] {
        [
            Splits::class_counts(&s.train),
            Splits::class_counts(&s.val),
            Splits::class_counts(&s.test),
        ]
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(723, [0.7, 0.15, 0.15]), [506, 109, 108]);
        assert_eq!(apportion(500, [0.7, 0.15, 0.15]), [350, 75, 75]);
        assert_eq!(apportion(723, [0.04, 0.04, 0.92]), [29, 29, 665]);
        assert_eq!(apportion(500, [0.04, 0.04, 0.92]), [20, 20, 460]);
        assert_eq!(apportion(0, [0.2, 0.3, 0.5]), [0, 0, 0]);
    }

    #[test]
    fn everything_to_train() {
        let s = split(dataset(5, 4), &SplitConfig::new(1.0, 0.0, 0.0, 3).unwrap()).unwrap();
        assert_eq!(s.train.len(), 9);
        assert!(s.val.is_empty() && s.test.is_empty());
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn tiny_split_warns() {
        let s = split(
            dataset(3, 3),
            &SplitConfig::new(0.9, 0.05, 0.05, 0).unwrap(),
        )
        .unwrap();
        assert!(!s.warnings.is_empty());
        assert_eq!(s.train.len() + s.val.len() + s.test.len(), 6);
    }

    #[test]
    fn invalid_ratios() {
        assert!(SplitConfig::new(0.5, 0.5, 0.5, 0).is_err());
        assert!(SplitConfig::new(1.2, -0.2, 0.0, 0).is_err());
    }

    #[test]
    fn table_rows() {
        let s = split(
            dataset(723, 500),
            &SplitConfig::new(0.7, 0.15, 0.15, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(counts(&s), [(506, 350), (109, 75), (108, 75)]);
        let s = split(
            dataset(723, 500),
            &SplitConfig::new(0.04, 0.04, 0.92, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(counts(&s), [(29, 20), (29, 20), (665, 460)]);
    }

    #[test]
    fn record_lists_ids() {
        let cfg = SplitConfig::new(0.5, 0.25, 0.25, 4).unwrap();
        let s = split(dataset(4, 4), &cfg).unwrap();
        let r = s.record(&cfg);
        assert_eq!(r.train.len() + r.val.len() + r.test.len(), 8);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.starts_with(r#"{"seed":4,"ratios":[0.5,0.25,0.25],"train":["#));
    }

    proptest! {
        #[test]
        fn partition_is_exact(
            crack in 0usize..60,
            clean in 0usize..60,
            a in 0.0f64..1.0,
            b in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let (train, val) = (a, (1.0 - a) * b);
            let cfg = SplitConfig::new(train, val, 1.0 - train - val, seed).unwrap();
            let s = split(dataset(crack, clean), &cfg).unwrap();
            let mut seen = HashSet::new();
            for x in s.train.iter().chain(&s.val).chain(&s.test) {
                prop_assert!(seen.insert(x.id.clone()));
            }
            prop_assert_eq!(seen.len(), crack + clean);
            let again = split(dataset(crack, clean), &cfg).unwrap();
            prop_assert_eq!(s.record(&cfg), again.record(&cfg));
        }
    }
}
