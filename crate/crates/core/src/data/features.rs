//! Built-in fixed feature extractor and CSV feature import.
//!
//! The extractor splits a patch into an 8x8 grid of 28x28-pixel cells and
//! emits 8 values per cell, cell-major (row by row, then column):
//!
//! | k | value |
//! |---|-------|
//! | 0 | fraction of pixels with gradient magnitude in `[12, 30)` gray levels |
//! | 1 | fraction of pixels with gradient magnitude `>= 30` |
//! | 2 | magnitude-weighted orientation bin `[0°, 60°)` |
//! | 3 | magnitude-weighted orientation bin `[60°, 120°)` |
//! | 4 | magnitude-weighted orientation bin `[120°, 180°)` |
//! | 5 | minimum intensity / 255 |
//! | 6 | mean intensity / 255 |
//! | 7 | maximum intensity / 255 |
//!
//! Orientation bins are sums of magnitude (in units of 255) divided by the
//! cell's pixel count. Gradients are central differences with clamped borders.

use std::f64::consts::PI;
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;

use super::{Label, Patch, Sample, PATCH_SIZE};
use crate::error::{Error, Result};

pub const GRID: usize = 8;
pub const CELL: usize = PATCH_SIZE / GRID;
pub const PER_CELL: usize = 8;
pub const FEATURE_DIM: usize = GRID * GRID * PER_CELL;

const MODERATE_EDGE: f64 = 12.0;
const STRONG_EDGE: f64 = 30.0;

/// Where a sample's features came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSource {
    BuiltIn,
    Imported,
}

pub fn extract_features(patch: &Patch) -> Vec<f64> {
    let px = |r: usize, c: usize| patch.at(r, c) as f64;
    let last = PATCH_SIZE - 1;
    let mut out = vec![0.0; FEATURE_DIM];
    let cell_pixels = (CELL * CELL) as f64;
    for cr in 0..GRID {
        for cc in 0..GRID {
            let f = &mut out[(cr * GRID + cc) * PER_CELL..][..PER_CELL];
            let (mut lo, mut hi, mut sum) = (f64::MAX, f64::MIN, 0.0);
            for r in cr * CELL..(cr + 1) * CELL {
                for c in cc * CELL..(cc + 1) * CELL {
                    let v = px(r, c);
                    lo = lo.min(v);
                    hi = hi.max(v);
                    sum += v;
                    let gx = px(r, (c + 1).min(last)) - px(r, c.saturating_sub(1));
                    let gy = px((r + 1).min(last), c) - px(r.saturating_sub(1), c);
                    let mag = gx.hypot(gy);
                    if mag == 0.0 {
                        continue;
                    }
                    if mag >= STRONG_EDGE {
                        f[1] += 1.0;
                    } else if mag >= MODERATE_EDGE {
                        f[0] += 1.0;
                    }
                    let angle = gy.atan2(gx).rem_euclid(PI);
                    let bin = ((angle / (PI / 3.0)) as usize).min(2);
                    f[2 + bin] += mag / 255.0;
                }
            }
            for v in &mut f[..5] {
                *v /= cell_pixels;
            }
            f[5] = lo / 255.0;
            f[6] = sum / cell_pixels / 255.0;
            f[7] = hi / 255.0;
        }
    }
    out
}

pub fn samples_from_patches(patches: &[Patch]) -> Vec<Sample> {
    patches
        .par_iter()
        .map(|p| Sample {
            id: p.id.clone(),
            label: p.label,
            features: extract_features(p),
        })
        .collect()
}

/// Reads `id,label,f_0,...,f_{F-1}` rows. A first row starting with `id` is
/// treated as a header. Every row must have the same `F`.
pub fn import_features(path: &Path) -> Result<Vec<Sample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut samples: Vec<Sample> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        if i == 0 && record.get(0) == Some("id") {
            continue;
        }
        if record.len() < 3 {
            return Err(Error::format(
                path,
                format!("line {line}: expected id,label and at least one feature"),
            ));
        }
        let f = record.len() - 2;
        match width {
            None => width = Some(f),
            Some(w) if w != f => {
                return Err(Error::format(
                    path,
                    format!("line {line}: {f} features, expected {w}"),
                ))
            }
            _ => {}
        }
        let label: Label = record[1]
            .parse()
            .map_err(|_| Error::format(path, format!("line {line}: bad label {:?}", &record[1])))?;
        let features = record
            .iter()
            .skip(2)
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(Error::format(
                    path,
                    format!("line {line}: bad feature {v:?}"),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(Sample {
            id: record[0].to_string(),
            label,
            features,
        });
    }
    Ok(samples)
}

/// Writes samples in the format [`import_features`] reads, with a header.
pub fn export_features(path: &Path, samples: &[Sample]) -> Result<()> {
    let width = samples.first().map_or(0, |s| s.features.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..width).map(|i| format!("f_{i}")));
    w.write_record(&header).expect("writing to memory");
    for s in samples {
        let mut row = vec![s.id.clone(), s.label.to_string()];
        row.extend(s.features.iter().map(|v| v.to_string()));
        w.write_record(&row).expect("writing to memory");
    }
    crate::io::write_atomic(path, &w.into_inner().expect("in-memory writer flushes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthesize, PATCH_PIXELS};
    use std::fs;

    #[test]
    fn constant_patch_has_no_gradients() {
        let p = Patch::new("flat", Label::NoCrack, vec![90; PATCH_PIXELS]).unwrap();
        let f = extract_features(&p);
        assert_eq!(f.len(), FEATURE_DIM);
        for cell in f.chunks(PER_CELL) {
            assert!(cell[..5].iter().all(|&v| v == 0.0));
            assert_eq!(&cell[5..], &[90.0 / 255.0; 3]);
        }
    }

    #[test]
    fn extraction_is_pure() {
        let p = synthesize(4, "a", true).patch;
        let copy = p.clone();
        assert_eq!(extract_features(&p), extract_features(&copy));
    }

    #[test]
    fn crack_adds_gradient_energy() {
        let crack = extract_features(&synthesize(8, "a", true).patch);
        let clean = extract_features(&synthesize(8, "a", false).patch);
        let dist: f64 = crack
            .iter()
            .zip(&clean)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(dist > 0.0);
        let strong = |f: &[f64]| f.chunks(PER_CELL).map(|c| c[1]).sum::<f64>();
        assert!(strong(&crack) > strong(&clean));
    }

    #[test]
    fn import_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        fs::write(
            &path,
            "a,crack,1,2,3,4\nb,no_crack,0,0,0,0\nc,1,0.5,0.5,0.5,0.5\n",
        )
        .unwrap();
        let s = import_features(&path).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|x| x.features.len() == 4));
        assert_eq!(s[2].label, Label::Crack);
    }

    #[test]
    fn ragged_rows_report_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        fs::write(
            &path,
            "id,label,f_0,f_1,f_2,f_3\na,crack,1,2,3,4\nb,crack,1,2,3,4,5\n",
        )
        .unwrap();
        let err = import_features(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn wide_feature_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wide.csv");
        let samples: Vec<Sample> = (0..3)
            .map(|i| Sample {
                id: format!("s{i}"),
                label: Label::from_index(i % 2).unwrap(),
                features: (0..4096).map(|k| (k * (i + 1)) as f64 * 1e-3).collect(),
            })
            .collect();
        export_features(&path, &samples).unwrap();
        assert_eq!(import_features(&path).unwrap(), samples);
    }
}
