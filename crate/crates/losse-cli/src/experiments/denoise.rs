//! Image-denoising benchmark: four encoder families under a shared nonzero
//! budget, each with a linear head. Sparse encoders get the closed-form
//! least-squares head; dense encoders train by mini-batch gradient descent.

use std::path::Path;

use losse_core::encoding::{
    BaselineEncoder, BaselineEncoderConfig, BaselineKind, Features, LosseConfig, LosseEncoder,
};
use losse_core::env::{load_denoise_dataset, DenoiseConfig, DenoiseDataset};
use losse_core::error::Result;
use losse_core::learner::{BatchAccumulator, SgdLearner};
use losse_core::parallel::par_map;
use losse_core::util::{derive_seed, mean, stderr};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::DenoiseExpConfig;
use crate::report::{fmt_f64, write_manifest, CsvWriter};

pub const ENCODERS: [&str; 4] = ["losse", "relu", "tilecode", "fourier"];

#[derive(Debug, Clone)]
pub struct DenoiseRun {
    pub patch_side: usize,
    pub encoder: &'static str,
    pub seed: u64,
    /// Chosen sweep value: edges per axis for sparse encoders, projection
    /// scale for dense ones.
    pub hyper: f64,
    pub test_mse: f64,
}

#[derive(Debug, Clone)]
pub struct DenoiseSummaryRow {
    pub patch_side: usize,
    pub encoder: &'static str,
    pub mse_mean: f64,
    pub mse_stderr: f64,
}

#[derive(Debug, Clone)]
pub struct DenoiseReport {
    pub runs: Vec<DenoiseRun>,
    pub summary: Vec<DenoiseSummaryRow>,
    /// Whether a real digit corpus backed the dataset.
    pub real_corpus: bool,
}

impl DenoiseReport {
    pub fn mean_mse(&self, patch_side: usize, encoder: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.patch_side == patch_side && r.encoder == encoder)
            .map(|r| r.mse_mean)
    }
}

/// Per-pixel test MSE of a frozen weight matrix over encoded features.
fn test_mse<F>(ds: &DenoiseDataset, weights: &Array2<f64>, mut encode: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Features>,
{
    let mut total = 0.0;
    for pair in &ds.test {
        let phi = encode(&pair.noisy)?;
        let pred = losse_core::learner::linear_predict(weights, &phi);
        total += pred
            .iter()
            .zip(&pair.clean)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>();
    }
    Ok(total / (ds.test.len() * ds.patch_dim) as f64)
}

/// Closed-form least-squares head over any encoder's features.
fn closed_form_head<F>(
    ds: &DenoiseDataset,
    dim: usize,
    epsilon: f64,
    mut encode: F,
) -> Result<Array2<f64>>
where
    F: FnMut(&[f64]) -> Result<Features>,
{
    let mut acc = BatchAccumulator::new(dim, ds.patch_dim);
    for pair in &ds.train {
        let phi = encode(&pair.noisy)?;
        acc.add(&phi, &pair.clean);
    }
    acc.solve(epsilon)
}

/// Mini-batch gradient-descent head for dense features.
fn gd_head<F>(
    ds: &DenoiseDataset,
    dim: usize,
    cfg: &DenoiseExpConfig,
    seed: u64,
    mut encode: F,
) -> Result<Array2<f64>>
where
    F: FnMut(&[f64]) -> Result<Features>,
{
    let mut sgd =
        SgdLearner::new(dim, ds.patch_dim, cfg.gd_learning_rate)?.with_batch(cfg.gd_batch);
    let features: Vec<(Features, Vec<f64>)> = ds
        .train
        .iter()
        .map(|pair| Ok((encode(&pair.noisy)?, pair.clean.clone())))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6764));
    for _ in 0..cfg.gd_epochs {
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut batch = Vec::with_capacity(cfg.gd_batch);
        for &idx in &order {
            batch.push(features[idx].clone());
            if batch.len() == cfg.gd_batch {
                sgd.step_batch(&batch)?;
                batch.clear();
            }
        }
        if !batch.is_empty() {
            sgd.step_batch(&batch)?;
        }
    }
    Ok(sgd.weights().clone())
}

fn one_job(
    cfg: &DenoiseExpConfig,
    patch_side: usize,
    seed: u64,
) -> Result<(Vec<DenoiseRun>, bool)> {
    let mut ds_cfg = DenoiseConfig::new(patch_side, derive_seed(seed, patch_side as u64));
    ds_cfg.noise_sigma = cfg.noise_sigma;
    ds_cfg.max_images = cfg.max_images;
    let (ds, real) = load_denoise_dataset(cfg.dataset_path.as_deref(), &ds_cfg)?;
    let input_dim = ds.patch_dim;
    let mut runs = Vec::new();

    // Sparse lattice encoder: sweep edges per axis, closed-form head.
    let mut best: Option<(f64, f64)> = None;
    for &lambda in &cfg.lambda_sweep {
        let enc = LosseEncoder::new(LosseConfig::new(
            input_dim,
            cfg.kappa,
            cfg.rho,
            lambda,
            derive_seed(seed, 0x6c6f + lambda as u64),
        ))?;
        let w = closed_form_head(&ds, enc.output_dim(), cfg.epsilon, |x| {
            enc.encode(x).map(Features::Sparse)
        })?;
        let mse = test_mse(&ds, &w, |x| enc.encode(x).map(Features::Sparse))?;
        if best.map_or(true, |(m, _)| mse < m) {
            best = Some((mse, lambda as f64));
        }
    }
    let (mse, hyper) = best.unwrap();
    runs.push(DenoiseRun {
        patch_side,
        encoder: "losse",
        seed,
        hyper,
        test_mse: mse,
    });

    // Random tile coding: same nonzero budget, one-hot tiles, closed form.
    let mut best: Option<(f64, f64)> = None;
    for &cells in &cfg.lambda_sweep {
        let enc = BaselineEncoder::new(
            BaselineEncoderConfig::new(
                BaselineKind::TileCode,
                input_dim,
                cfg.nonzero_budget * cells,
                derive_seed(seed, 0x7463 + cells as u64),
            )
            .with_tiling(cfg.nonzero_budget, 1),
        )?;
        let w = closed_form_head(&ds, enc.output_dim(), cfg.epsilon, |x| enc.encode(x))?;
        let mse = test_mse(&ds, &w, |x| enc.encode(x))?;
        if best.map_or(true, |(m, _)| mse < m) {
            best = Some((mse, cells as f64));
        }
    }
    let (mse, hyper) = best.unwrap();
    runs.push(DenoiseRun {
        patch_side,
        encoder: "tilecode",
        seed,
        hyper,
        test_mse: mse,
    });

    // Dense random features: sweep the projection scale, GD head. A scale
    // that makes gradient descent diverge simply loses the sweep.
    for (name, kind) in [
        ("fourier", BaselineKind::Fourier),
        ("relu", BaselineKind::Relu),
    ] {
        let mut best: Option<(f64, f64)> = None;
        for &scale in &cfg.scale_sweep {
            let enc = BaselineEncoder::new(
                BaselineEncoderConfig::new(
                    kind,
                    input_dim,
                    cfg.nonzero_budget,
                    derive_seed(seed, 0x6673 + (scale * 10.0) as u64),
                )
                .with_scale(scale),
            )?;
            let mse = match gd_head(&ds, cfg.nonzero_budget, cfg, seed, |x| enc.encode(x)) {
                Ok(w) => test_mse(&ds, &w, |x| enc.encode(x))?,
                Err(losse_core::LosseError::Value(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if best.map_or(true, |(m, _)| mse < m) {
                best = Some((mse, scale));
            }
        }
        let (mse, hyper) = best.unwrap();
        runs.push(DenoiseRun {
            patch_side,
            encoder: name,
            seed,
            hyper,
            test_mse: mse,
        });
    }
    Ok((runs, real))
}

pub fn run_denoise(cfg: &DenoiseExpConfig) -> Result<DenoiseReport> {
    cfg.validate()?;
    let jobs: Vec<(usize, u64)> = cfg
        .patch_sides
        .iter()
        .flat_map(|&p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let results = par_map(jobs, |(patch, seed)| one_job(cfg, patch, seed));
    let mut runs = Vec::new();
    let mut real_corpus = false;
    for r in results {
        let (mut rs, real) = r?;
        real_corpus |= real;
        runs.append(&mut rs);
    }
    let mut summary = Vec::new();
    for &patch in &cfg.patch_sides {
        for encoder in ENCODERS {
            let mses: Vec<f64> = runs
                .iter()
                .filter(|r| r.patch_side == patch && r.encoder == encoder)
                .map(|r| r.test_mse)
                .collect();
            summary.push(DenoiseSummaryRow {
                patch_side: patch,
                encoder,
                mse_mean: mean(&mses),
                mse_stderr: stderr(&mses),
            });
        }
    }
    Ok(DenoiseReport {
        runs,
        summary,
        real_corpus,
    })
}

pub fn write_report(report: &DenoiseReport, cfg: &DenoiseExpConfig, out_dir: &Path) -> Result<()> {
    write_manifest(out_dir, "denoise", cfg, &cfg.seeds)?;
    let mut runs = CsvWriter::create(
        &out_dir.join("denoise_runs.csv"),
        &["patch_dim", "encoder", "seed", "hyper", "test_mse"],
    )?;
    for r in &report.runs {
        runs.row(&[
            (r.patch_side * r.patch_side).to_string(),
            r.encoder.to_string(),
            r.seed.to_string(),
            fmt_f64(r.hyper),
            fmt_f64(r.test_mse),
        ])?;
    }
    runs.finish()?;
    let mut summary = CsvWriter::create(
        &out_dir.join("denoise_summary.csv"),
        &[
            "patch_dim",
            "encoder",
            "mse_mean",
            "mse_stderr",
            "real_corpus",
        ],
    )?;
    for r in &report.summary {
        summary.row(&[
            (r.patch_side * r.patch_side).to_string(),
            r.encoder.to_string(),
            fmt_f64(r.mse_mean),
            fmt_f64(r.mse_stderr),
            u8::from(report.real_corpus).to_string(),
        ])?;
    }
    summary.finish()
}
