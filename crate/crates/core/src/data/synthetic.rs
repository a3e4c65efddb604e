//! Seeded synthetic concrete-like patches.
//!
//! Clean patches are a mid-gray base with multi-scale value noise, per-pixel
//! grain and a few soft dark pores. Crack patches use the same texture for the
//! same seed and add a 4-connected random-walk crack, 1 or 2 pixels wide,
//! running edge to edge.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Label, Patch, PATCH_PIXELS, PATCH_SIZE};
use crate::rng::{self, derive_seed, STREAM_CRACK, STREAM_TEXTURE};

/// Lattice spacings and amplitudes (gray levels) of the value-noise octaves.
const OCTAVES: [(usize, f64); 4] = [(56, 9.0), (28, 6.0), (14, 4.0), (7, 2.5)];
const GRAIN: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub patch: Patch,
    /// Pixels darkened by the crack, row-major; `None` for clean patches.
    pub crack_mask: Option<Vec<bool>>,
}

/// Renders one patch from `seed`. The texture depends only on `seed`, so the
/// crack and clean renderings of a seed differ exactly on the crack mask.
pub fn synthesize(seed: u64, id: impl Into<String>, crack: bool) -> Synthetic {
    let mut texture_rng = rng::stream(seed, STREAM_TEXTURE);
    let mut field = texture(&mut texture_rng);
    let crack_mask = crack.then(|| {
        let mut crack_rng = rng::stream(seed, STREAM_CRACK);
        let mask = crack_path(&mut crack_rng);
        let depth = crack_rng.random_range(45.0..75.0);
        for (v, &on) in field.iter_mut().zip(&mask) {
            if on {
                *v -= depth * crack_rng.random_range(0.85..1.0);
            }
        }
        mask
    });
    let pixels = field
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    let label = if crack { Label::Crack } else { Label::NoCrack };
    Synthetic {
        patch: Patch::new(id, label, pixels).expect("generator emits full patches"),
        crack_mask,
    }
}

/// `n_crack` crack patches (`crack_00000`, …) followed by `n_clean` clean ones
/// (`clean_00000`, …).
pub fn generate_synthetic(n_crack: usize, n_clean: usize, seed: u64) -> Vec<Patch> {
    let jobs: Vec<(bool, usize)> = (0..n_crack)
        .map(|i| (true, i))
        .chain((0..n_clean).map(|i| (false, i)))
        .collect();
    jobs.par_iter()
        .map(|&(crack, i)| {
            let (tag, prefix) = if crack { (1, "crack") } else { (0, "clean") };
            let patch_seed = derive_seed(seed, &[tag, i as u64]);
            synthesize(patch_seed, format!("{prefix}_{i:05}"), crack).patch
        })
        .collect()
}

fn texture(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let base = 128.0 + rng.random_range(-8.0..8.0);
    let mut field = vec![base; PATCH_PIXELS];
    for &(cell, amp) in &OCTAVES {
        let n = PATCH_SIZE / cell + 2;
        let lattice: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for r in 0..PATCH_SIZE {
            let (gy, fy) = (r / cell, (r % cell) as f64 / cell as f64);
            for c in 0..PATCH_SIZE {
                let (gx, fx) = (c / cell, (c % cell) as f64 / cell as f64);
                let l = |y: usize, x: usize| lattice[y * n + x];
                let top = l(gy, gx) * (1.0 - fx) + l(gy, gx + 1) * fx;
                let bottom = l(gy + 1, gx) * (1.0 - fx) + l(gy + 1, gx + 1) * fx;
                field[r * PATCH_SIZE + c] += amp * (top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    for v in field.iter_mut() {
        *v += rng.random_range(-GRAIN..GRAIN);
    }
    let pores = rng.random_range(0..=3);
    for _ in 0..pores {
        let (pr, pc) = (
            rng.random_range(0.0..PATCH_SIZE as f64),
            rng.random_range(0.0..PATCH_SIZE as f64),
        );
        let radius: f64 = rng.random_range(1.5..3.5);
        let depth = rng.random_range(12.0..30.0);
        let reach = radius.ceil() as isize;
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (r, c) = (pr as isize + dr, pc as isize + dc);
                if !(0..PATCH_SIZE as isize).contains(&r) || !(0..PATCH_SIZE as isize).contains(&c)
                {
                    continue;
                }
                let d2 = ((r as f64 - pr).powi(2) + (c as f64 - pc).powi(2)) / (radius * radius);
                if d2 < 1.0 {
                    field[r as usize * PATCH_SIZE + c as usize] -= depth * (1.0 - d2);
                }
            }
        }
    }
    field
}

/// Random walk along a major axis with occasional lateral unit steps; every
/// pixel shares an edge with its predecessor.
fn crack_path(rng: &mut ChaCha8Rng) -> Vec<bool> {
    let vertical = rng.random_bool(0.5);
    let wide = rng.random_bool(0.5);
    let mut mask = vec![false; PATCH_PIXELS];
    let mut mark = |u: usize, v: usize| {
        let (r, c) = if vertical { (u, v) } else { (v, u) };
        mask[r * PATCH_SIZE + c] = true;
    };
    let mut v = rng.random_range(32..PATCH_SIZE - 32) as isize;
    let mut drift: isize = if rng.random_bool(0.5) { 1 } else { -1 };
    for u in 0..PATCH_SIZE {
        mark(u, v as usize);
        if wide {
            mark(u, v as usize + 1);
        }
        if rng.random_bool(0.1) {
            drift = -drift;
        }
        if rng.random_bool(0.3) {
            v = (v + drift).clamp(1, PATCH_SIZE as isize - 3);
            mark(u, v as usize);
            if wide {
                mark(u, v as usize + 1);
            }
        }
    }
    mask
}
