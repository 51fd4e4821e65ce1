//! Closed-form vs gradient-descent comparison on identical sparse features
//! across sparsity levels (edges per axis) and correlation levels.

use std::path::Path;

use losse_core::encoding::{Features, LosseConfig, LosseEncoder};
use losse_core::env::{PrwConfig, PrwStream};
use losse_core::error::Result;
use losse_core::learner::{FtlLearner, SgdLearner};
use losse_core::parallel::par_map;
use losse_core::util::{derive_seed, mean, stderr};

use crate::config::GdVsFtlConfig;
use crate::experiments::stream::Method;
use crate::report::{fmt_f64, write_manifest, CsvWriter};

#[derive(Debug, Clone)]
pub struct GdVsFtlRow {
    pub lambda: usize,
    pub d: f64,
    pub method: Method,
    pub mse_mean: f64,
    pub mse_stderr: f64,
}

#[derive(Debug, Clone)]
pub struct GdVsFtlReport {
    pub rows: Vec<GdVsFtlRow>,
}

impl GdVsFtlReport {
    pub fn mse(&self, lambda: usize, d: f64, method: Method) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.lambda == lambda && r.d == d && r.method == method)
            .map(|r| r.mse_mean)
    }
}

fn one_run(cfg: &GdVsFtlConfig, lambda: usize, d: f64, tag: u64, seed: u64) -> Result<(f64, f64)> {
    let encoder = LosseEncoder::new(LosseConfig::new(
        1,
        cfg.kappa,
        cfg.rho,
        lambda,
        derive_seed(seed, 0x656e63),
    ))?;
    let mut prw = PrwConfig::new(d, derive_seed(seed, 0x7374 + tag));
    prw.tau = cfg.tau;
    let (samples, centers) = PrwStream::collect(&prw, cfg.stream_len)?;
    let holdout = PrwStream::holdout_from_centers(
        &prw,
        &centers,
        cfg.holdout,
        derive_seed(seed, 0x686f + tag),
    )?;

    let mut ftl = FtlLearner::new(encoder.output_dim(), 1, cfg.epsilon)?;
    let mut sgd =
        SgdLearner::new(encoder.output_dim(), 1, cfg.gd_learning_rate)?.with_batch(cfg.gd_batch);
    let mut batch = Vec::with_capacity(cfg.gd_batch);
    for (x, y) in &samples {
        let phi = encoder.encode(&[*x])?;
        ftl.observe_sparse(&phi, &[*y])?;
        batch.push((Features::Sparse(phi), vec![*y]));
        if batch.len() == cfg.gd_batch {
            sgd.step_batch(&batch)?;
            batch.clear();
        }
    }
    if !batch.is_empty() {
        sgd.step_batch(&batch)?;
    }
    let mut ftl_mse = 0.0;
    let mut sgd_mse = 0.0;
    for (x, y) in &holdout {
        let phi = encoder.encode(&[*x])?;
        let pf = ftl.predict_sparse(&phi)?[0];
        let ps = sgd.predict(&Features::Sparse(phi))?[0];
        ftl_mse += (pf - y) * (pf - y);
        sgd_mse += (ps - y) * (ps - y);
    }
    let n = holdout.len() as f64;
    Ok((ftl_mse / n, sgd_mse / n))
}

pub fn run_gd_vs_ftl(cfg: &GdVsFtlConfig) -> Result<GdVsFtlReport> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for (li, &lambda) in cfg.lambda_grid.iter().enumerate() {
        for (di, &d) in cfg.d_grid.iter().enumerate() {
            for &seed in &cfg.seeds {
                jobs.push((lambda, d, (li * cfg.d_grid.len() + di) as u64, seed));
            }
        }
    }
    let results = par_map(jobs.clone(), |(lambda, d, tag, seed)| {
        one_run(cfg, lambda, d, tag, seed)
    });
    let mut rows = Vec::new();
    for &lambda in &cfg.lambda_grid {
        for &d in &cfg.d_grid {
            let mut ftl_mses = Vec::new();
            let mut sgd_mses = Vec::new();
            for (job, result) in jobs.iter().zip(&results) {
                if job.0 == lambda && job.1 == d {
                    let (f, s) = result
                        .as_ref()
                        .map_err(|e| losse_core::LosseError::Config(format!("run failed: {e}")))?;
                    ftl_mses.push(*f);
                    sgd_mses.push(*s);
                }
            }
            rows.push(GdVsFtlRow {
                lambda,
                d,
                method: Method::Ftl,
                mse_mean: mean(&ftl_mses),
                mse_stderr: stderr(&ftl_mses),
            });
            rows.push(GdVsFtlRow {
                lambda,
                d,
                method: Method::Sgd,
                mse_mean: mean(&sgd_mses),
                mse_stderr: stderr(&sgd_mses),
            });
        }
    }
    Ok(GdVsFtlReport { rows })
}

pub fn write_report(report: &GdVsFtlReport, cfg: &GdVsFtlConfig, out_dir: &Path) -> Result<()> {
    write_manifest(out_dir, "gd-vs-ftl", cfg, &cfg.seeds)?;
    let mut csv = CsvWriter::create(
        &out_dir.join("gd_vs_ftl.csv"),
        &["lambda", "d", "method", "mse_mean", "mse_stderr"],
    )?;
    for r in &report.rows {
        csv.row(&[
            r.lambda.to_string(),
            fmt_f64(r.d),
            r.method.to_string(),
            fmt_f64(r.mse_mean),
            fmt_f64(r.mse_stderr),
        ])?;
    }
    csv.finish()
}
