//! Stream-learning experiment: online regression on the piecewise random
//! walk across correlation levels, closed-form updates vs gradient descent
//! on the same features.

use std::fmt;
use std::path::Path;

use losse_core::encoding::{Features, LosseEncoder};
use losse_core::env::{PrwConfig, PrwStream};
use losse_core::error::Result;
use losse_core::learner::{FtlLearner, SgdLearner};
use losse_core::parallel::par_map;
use losse_core::util::{derive_seed, mean, stderr};

use crate::config::StreamConfig;
use crate::report::{fmt_f64, write_manifest, CsvWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ftl,
    Sgd,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ftl => write!(f, "losse-ftl"),
            Method::Sgd => write!(f, "losse-sgd"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StreamRun {
    pub d: f64,
    pub seed: u64,
    pub method: Method,
    pub mse: f64,
}

#[derive(Debug, Clone)]
pub struct StreamSummaryRow {
    pub d: f64,
    pub method: Method,
    pub mse_mean: f64,
    pub mse_stderr: f64,
}

#[derive(Debug, Clone)]
pub struct StreamReport {
    pub runs: Vec<StreamRun>,
    pub summary: Vec<StreamSummaryRow>,
}

impl StreamReport {
    pub fn mean_mse(&self, d: f64, method: Method) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.d == d && r.method == method)
            .map(|r| r.mse_mean)
    }
}

/// Single-pass learning on one stream realization, then MSE on a holdout
/// drawn across the centers that realization visited.
fn one_run(cfg: &StreamConfig, d: f64, d_index: usize, seed: u64) -> Result<Vec<StreamRun>> {
    let enc_seed = derive_seed(seed, 0x656e63);
    let encoder = LosseEncoder::new(cfg.encoder(enc_seed))?;
    let mut prw = PrwConfig::new(d, derive_seed(seed, 0x7374 + d_index as u64));
    prw.tau = cfg.tau;
    let (samples, centers) = PrwStream::collect(&prw, cfg.stream_len)?;
    let holdout = PrwStream::holdout_from_centers(
        &prw,
        &centers,
        cfg.holdout,
        derive_seed(seed, 0x686f + d_index as u64),
    )?;

    let mut ftl = FtlLearner::new(encoder.output_dim(), 1, cfg.epsilon)?;
    for (x, y) in &samples {
        let phi = encoder.encode(&[*x])?;
        ftl.observe_sparse(&phi, &[*y])?;
    }
    let ftl_mse = holdout_mse(&holdout, &encoder, |phi| ftl.predict_sparse(phi))?;
    let mut out = vec![StreamRun {
        d,
        seed,
        method: Method::Ftl,
        mse: ftl_mse,
    }];

    if cfg.with_sgd {
        // Same stream realization, so both methods see identical samples.
        let mut sgd = SgdLearner::new(encoder.output_dim(), 1, cfg.sgd_learning_rate)?
            .with_batch(cfg.sgd_batch);
        let mut batch = Vec::with_capacity(cfg.sgd_batch);
        for (x, y) in &samples {
            let phi = encoder.encode(&[*x])?;
            batch.push((Features::Sparse(phi), vec![*y]));
            if batch.len() == cfg.sgd_batch {
                sgd.step_batch(&batch)?;
                batch.clear();
            }
        }
        if !batch.is_empty() {
            sgd.step_batch(&batch)?;
        }
        let sgd_mse = holdout_mse(&holdout, &encoder, |phi| {
            sgd.predict(&Features::Sparse(phi.clone()))
        })?;
        out.push(StreamRun {
            d,
            seed,
            method: Method::Sgd,
            mse: sgd_mse,
        });
    }
    Ok(out)
}

fn holdout_mse<F>(holdout: &[(f64, f64)], encoder: &LosseEncoder, mut predict: F) -> Result<f64>
where
    F: FnMut(&losse_core::encoding::SparseVector) -> Result<Vec<f64>>,
{
    let mut total = 0.0;
    for (x, y) in holdout {
        let phi = encoder.encode(&[*x])?;
        let p = predict(&phi)?[0];
        total += (p - y) * (p - y);
    }
    Ok(total / holdout.len() as f64)
}

pub fn run_stream(cfg: &StreamConfig) -> Result<StreamReport> {
    cfg.validate()?;
    let jobs: Vec<(usize, f64, u64)> = cfg
        .d_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| cfg.seeds.iter().map(move |&s| (i, d, s)))
        .collect();
    let results = par_map(jobs, |(d_index, d, seed)| one_run(cfg, d, d_index, seed));
    let mut runs = Vec::new();
    for r in results {
        runs.extend(r?);
    }
    let mut summary = Vec::new();
    for (i, &d) in cfg.d_grid.iter().enumerate() {
        for method in [Method::Ftl, Method::Sgd] {
            let mses: Vec<f64> = runs
                .iter()
                .filter(|r| r.method == method && cfg.d_grid[i] == r.d)
                .map(|r| r.mse)
                .collect();
            if mses.is_empty() {
                continue;
            }
            summary.push(StreamSummaryRow {
                d,
                method,
                mse_mean: mean(&mses),
                mse_stderr: stderr(&mses),
            });
        }
    }
    Ok(StreamReport { runs, summary })
}

pub fn write_report(report: &StreamReport, cfg: &StreamConfig, out_dir: &Path) -> Result<()> {
    write_manifest(out_dir, "stream", cfg, &cfg.seeds)?;
    let mut runs = CsvWriter::create(
        &out_dir.join("stream_runs.csv"),
        &["d", "seed", "method", "mse"],
    )?;
    for r in &report.runs {
        runs.row(&[
            fmt_f64(r.d),
            r.seed.to_string(),
            r.method.to_string(),
            fmt_f64(r.mse),
        ])?;
    }
    runs.finish()?;
    let mut summary = CsvWriter::create(
        &out_dir.join("stream_summary.csv"),
        &["d", "method", "mse_mean", "mse_stderr"],
    )?;
    for r in &report.summary {
        summary.row(&[
            fmt_f64(r.d),
            r.method.to_string(),
            fmt_f64(r.mse_mean),
            fmt_f64(r.mse_stderr),
        ])?;
    }
    summary.finish()
}
