//! Image-denoising dataset: noisy center-cropped patches in, clean patches
//! out. Backed by an IDX digit corpus when one is available, otherwise by a
//! seeded synthetic corpus of stroke-like images so the benchmark stays
//! runnable offline.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LosseError, Result};

use super::idx::{read_idx_images_file, IdxImages};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    /// Side length of the center crop; input/target dimension is its square.
    pub patch_side: usize,
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    /// Cap on how many source images are used.
    #[serde(default = "default_max_images")]
    pub max_images: usize,
    pub seed: u64,
}

fn default_sigma() -> f64 {
    0.3
}

fn default_max_images() -> usize {
    10_000
}

impl DenoiseConfig {
    pub fn new(patch_side: usize, seed: u64) -> Self {
        DenoiseConfig {
            patch_side,
            noise_sigma: default_sigma(),
            max_images: default_max_images(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=7).contains(&self.patch_side) {
            return Err(LosseError::Config(format!(
                "patch_side must lie in 2..=7, got {}",
                self.patch_side
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(LosseError::Config("noise_sigma must be nonnegative".into()));
        }
        if self.max_images < 10 {
            return Err(LosseError::Config("max_images must be at least 10".into()));
        }
        Ok(())
    }

    pub fn patch_dim(&self) -> usize {
        self.patch_side * self.patch_side
    }
}

/// One training pair: the noisy patch and its clean original.
#[derive(Debug, Clone)]
pub struct DenoisePair {
    pub noisy: Vec<f64>,
    pub clean: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DenoiseDataset {
    pub train: Vec<DenoisePair>,
    pub test: Vec<DenoisePair>,
    pub patch_dim: usize,
}

const SPLIT_TRAIN_PER_TEN: usize = 9;

fn center_crop(pixels: &[f64], side: usize, patch: usize) -> Vec<f64> {
    let start = (side - patch) / 2;
    let mut out = Vec::with_capacity(patch * patch);
    for r in 0..patch {
        let row = (start + r) * side + start;
        out.extend_from_slice(&pixels[row..row + patch]);
    }
    out
}

fn build_pairs(images: Vec<Vec<f64>>, side: usize, cfg: &DenoiseConfig) -> DenoiseDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Deterministic shuffle, then a 9:1 train/test split.
    let mut order: Vec<usize> = (0..images.len()).collect();
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let test_len = images.len() / (SPLIT_TRAIN_PER_TEN + 1);
    let normal = StandardNormal;
    let mut pairs = Vec::with_capacity(images.len());
    for &idx in &order {
        let clean = center_crop(&images[idx], side, cfg.patch_side);
        let noisy: Vec<f64> = clean
            .iter()
            .map(|&p| {
                let z: f64 = normal.sample(&mut rng);
                p + z * cfg.noise_sigma
            })
            .collect();
        pairs.push(DenoisePair { noisy, clean });
    }
    let test = pairs.split_off(pairs.len() - test_len);
    DenoiseDataset {
        train: pairs,
        test,
        patch_dim: cfg.patch_dim(),
    }
}

/// Builds the dataset from parsed IDX images.
pub fn dataset_from_images(images: &IdxImages, cfg: &DenoiseConfig) -> Result<DenoiseDataset> {
    cfg.validate()?;
    if images.rows != images.cols {
        return Err(LosseError::Config(format!(
            "expected square source images, got {}x{}",
            images.rows, images.cols
        )));
    }
    if cfg.patch_side > images.rows {
        return Err(LosseError::Config(format!(
            "patch_side {} exceeds image side {}",
            cfg.patch_side, images.rows
        )));
    }
    let count = images.count.min(cfg.max_images);
    let normalized: Vec<Vec<f64>> = (0..count).map(|i| images.normalized(i)).collect();
    Ok(build_pairs(normalized, images.rows, cfg))
}

/// Quadratic Bezier point.
fn bezier(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64), t: f64) -> (f64, f64) {
    let u = 1.0 - t;
    (
        u * u * p0.0 + 2.0 * u * t * p1.0 + t * t * p2.0,
        u * u * p0.1 + 2.0 * u * t * p1.1 + t * t * p2.1,
    )
}

/// Seeded corpus of stroke-like grayscale images: a few random Bezier
/// strokes rendered with Gaussian cross-sections, loosely mimicking
/// handwritten-digit statistics (sparse bright strokes on dark background).
pub fn synthetic_images(count: usize, side: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = side as f64 * 0.15;
    let hi = side as f64 * 0.85;
    (0..count)
        .map(|_| {
            let mut img = vec![0.0f64; side * side];
            let strokes = rng.random_range(2..=4);
            for _ in 0..strokes {
                let p0 = (rng.random_range(lo..hi), rng.random_range(lo..hi));
                let p1 = (rng.random_range(lo..hi), rng.random_range(lo..hi));
                let p2 = (rng.random_range(lo..hi), rng.random_range(lo..hi));
                let width: f64 = rng.random_range(0.6..1.2);
                let steps = side * 2;
                for k in 0..=steps {
                    let (cx, cy) = bezier(p0, p1, p2, k as f64 / steps as f64);
                    let radius = (3.0 * width).ceil() as isize;
                    let (ix, iy) = (cx.round() as isize, cy.round() as isize);
                    for dy in -radius..=radius {
                        for dx in -radius..=radius {
                            let (px, py) = (ix + dx, iy + dy);
                            if px < 0 || py < 0 || px >= side as isize || py >= side as isize {
                                continue;
                            }
                            let d2 = (px as f64 - cx).powi(2) + (py as f64 - cy).powi(2);
                            let v = (-d2 / (2.0 * width * width)).exp();
                            let cell = &mut img[py as usize * side + px as usize];
                            *cell = cell.max(v);
                        }
                    }
                }
            }
            // Saturate stroke cores the way anti-aliased handwriting does.
            for v in &mut img {
                *v = (*v * 1.6).min(1.0);
            }
            img
        })
        .collect()
}

/// Dataset from the synthetic corpus.
pub fn synthetic_dataset(cfg: &DenoiseConfig) -> Result<DenoiseDataset> {
    cfg.validate()?;
    let side = 28;
    let images = synthetic_images(cfg.max_images, side, cfg.seed ^ 0x5f37_6c81);
    Ok(build_pairs(images, side, cfg))
}

/// Loads the IDX corpus at `path` (a file, or a directory containing
/// `train-images-idx3-ubyte`); falls back to the synthetic corpus when no
/// path is given. The boolean reports whether real data was used.
pub fn load_denoise_dataset(
    path: Option<&Path>,
    cfg: &DenoiseConfig,
) -> Result<(DenoiseDataset, bool)> {
    match path {
        Some(p) => {
            let file = if p.is_dir() {
                p.join("train-images-idx3-ubyte")
            } else {
                p.to_path_buf()
            };
            let images = read_idx_images_file(&file)?;
            Ok((dataset_from_images(&images, cfg)?, true))
        }
        None => Ok((synthetic_dataset(cfg)?, false)),
    }
}
