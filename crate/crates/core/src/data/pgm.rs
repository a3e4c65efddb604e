//! Binary PGM (P5) patches and the `filename,label` manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Label, Patch, PATCH_PIXELS, PATCH_SIZE};
use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Parses a P5 image, returning `(width, height, pixels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|msg| Error::format(path, msg))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<u8>), String> {
    let mut pos = 0;
    let token = |pos: &mut usize| -> std::result::Result<String, String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let magic = token(&mut pos)?;
    if magic != "P5" {
        return Err(format!("bad magic {magic:?}, expected P5"));
    }
    let mut number = |what: &str| -> std::result::Result<usize, String> {
        let t = token(&mut pos)?;
        t.parse().map_err(|_| format!("bad {what} {t:?}"))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(format!("maxval {maxval}, expected 255"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let data = bytes.get(pos..).unwrap_or_default();
    if data.len() != width * height {
        return Err(format!(
            "raster has {} bytes, expected {width}x{height}",
            data.len()
        ));
    }
    Ok((width, height, data.to_vec()))
}

pub fn encode_pgm(pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{PATCH_SIZE} {PATCH_SIZE}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write_pgm(path: &Path, patch: &Patch) -> Result<()> {
    write_atomic(path, &encode_pgm(&patch.pixels))
}

fn read_patch(path: &Path, id: String, label: Label) -> Result<Patch> {
    let (w, h, pixels) = read_pgm(path)?;
    if (w, h) != (PATCH_SIZE, PATCH_SIZE) {
        return Err(Error::format(
            path,
            format!("{w}x{h} patch, expected {PATCH_SIZE}x{PATCH_SIZE}"),
        ));
    }
    debug_assert_eq!(pixels.len(), PATCH_PIXELS);
    Patch::new(id, label, pixels)
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    filename: String,
    label: String,
}

/// Loads every patch listed in `manifest` (paths relative to `dir`).
pub fn load_dataset(dir: &Path, manifest: &Path) -> Result<Vec<Patch>> {
    let mut reader = csv::Reader::from_path(manifest).map_err(|e| csv_error(manifest, e))?;
    let mut patches = Vec::new();
    for (line, row) in reader.deserialize::<ManifestRow>().enumerate() {
        let row = row.map_err(|e| csv_error(manifest, e))?;
        let label: Label = row.label.parse().map_err(|_| {
            Error::format(
                manifest,
                format!("line {}: unknown label {:?}", line + 2, row.label),
            )
        })?;
        let path: PathBuf = dir.join(&row.filename);
        let id = Path::new(&row.filename)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| row.filename.clone());
        patches.push(read_patch(&path, id, label)?);
    }
    if patches.is_empty() {
        log::warn!("manifest {} lists no patches", manifest.display());
    }
    Ok(patches)
}

/// Writes `<id>.pgm` for every patch plus `manifest.csv` into `dir`.
pub fn write_dataset(dir: &Path, patches: &[Patch]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = csv::Writer::from_writer(Vec::new());
    manifest
        .write_record(["filename", "label"])
        .expect("writing to memory");
    for patch in patches {
        let filename = format!("{}.pgm", patch.id);
        write_pgm(&dir.join(&filename), patch)?;
        manifest
            .write_record([filename.as_str(), patch.label.as_str()])
            .expect("writing to memory");
    }
    let bytes = manifest.into_inner().expect("in-memory writer flushes");
    let path = dir.join("manifest.csv");
    write_atomic(&path, &bytes)?;
    Ok(path)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        },
        _ => Error::format(path, e.to_string()),
    }
}
