//! Encoder micro-benchmark: sparsity statistics against the guaranteed
//! bound, and encode throughput, for all four encoder families at a shared
//! nonzero budget.

use std::path::Path;
use std::time::Instant;

use losse_core::encoding::{
    BaselineEncoder, BaselineEncoderConfig, BaselineKind, Features, LosseConfig, LosseEncoder,
};
use losse_core::error::Result;
use losse_core::parallel::par_map;
use losse_core::util::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::EncoderBenchConfig;
use crate::report::{fmt_f64, write_manifest, CsvWriter};

#[derive(Debug, Clone)]
pub struct EncoderBenchRow {
    pub seed: u64,
    pub encoder: String,
    pub output_dim: usize,
    pub nnz_bound: Option<usize>,
    pub nnz_mean: f64,
    pub nnz_max: usize,
    pub density_max: f64,
    pub bound_satisfied: bool,
    pub encode_micros: f64,
}

#[derive(Debug, Clone)]
pub struct EncoderBenchReport {
    pub rows: Vec<EncoderBenchRow>,
}

fn bench_encoder<F>(
    name: &str,
    seed: u64,
    output_dim: usize,
    nnz_bound: Option<usize>,
    samples: &[Vec<f64>],
    mut encode: F,
) -> Result<EncoderBenchRow>
where
    F: FnMut(&[f64]) -> Result<Features>,
{
    let mut nnz_total = 0usize;
    let mut nnz_max = 0usize;
    let start = Instant::now();
    for x in samples {
        let f = encode(x)?;
        let nnz = f.nnz();
        nnz_total += nnz;
        nnz_max = nnz_max.max(nnz);
    }
    let elapsed = start.elapsed().as_secs_f64() * 1e6 / samples.len() as f64;
    let density_max = nnz_max as f64 / output_dim as f64;
    Ok(EncoderBenchRow {
        seed,
        encoder: name.to_string(),
        output_dim,
        nnz_bound,
        nnz_mean: nnz_total as f64 / samples.len() as f64,
        nnz_max,
        density_max,
        bound_satisfied: nnz_bound.map_or(true, |b| nnz_max <= b),
        encode_micros: elapsed,
    })
}

fn one_seed(cfg: &EncoderBenchConfig, seed: u64) -> Result<Vec<EncoderBenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x62656e63));
    let samples: Vec<Vec<f64>> = (0..cfg.samples)
        .map(|_| {
            (0..cfg.input_dim)
                .map(|_| rng.random_range(-3.0..3.0))
                .collect()
        })
        .collect();
    let budget = cfg.kappa * (1 << cfg.rho);

    let losse = LosseEncoder::new(LosseConfig::new(
        cfg.input_dim,
        cfg.kappa,
        cfg.rho,
        cfg.lambda,
        derive_seed(seed, 1),
    ))?;
    let fourier = BaselineEncoder::new(BaselineEncoderConfig::new(
        BaselineKind::Fourier,
        cfg.input_dim,
        budget,
        derive_seed(seed, 2),
    ))?;
    let relu = BaselineEncoder::new(BaselineEncoderConfig::new(
        BaselineKind::Relu,
        cfg.input_dim,
        budget,
        derive_seed(seed, 3),
    ))?;
    let tile = BaselineEncoder::new(
        BaselineEncoderConfig::new(
            BaselineKind::TileCode,
            cfg.input_dim,
            budget * cfg.lambda,
            derive_seed(seed, 4),
        )
        .with_tiling(budget, 1),
    )?;

    Ok(vec![
        bench_encoder(
            "losse",
            seed,
            losse.output_dim(),
            Some(budget),
            &samples,
            |x| losse.encode(x).map(Features::Sparse),
        )?,
        bench_encoder("fourier", seed, budget, None, &samples, |x| {
            fourier.encode(x)
        })?,
        bench_encoder("relu", seed, budget, None, &samples, |x| relu.encode(x))?,
        bench_encoder(
            "tilecode",
            seed,
            budget * cfg.lambda,
            Some(budget),
            &samples,
            |x| tile.encode(x),
        )?,
    ])
}

pub fn run_encoder_bench(cfg: &EncoderBenchConfig) -> Result<EncoderBenchReport> {
    cfg.validate()?;
    let results = par_map(cfg.seeds.clone(), |seed| one_seed(cfg, seed));
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(EncoderBenchReport { rows })
}

pub fn write_report(
    report: &EncoderBenchReport,
    cfg: &EncoderBenchConfig,
    out_dir: &Path,
) -> Result<()> {
    write_manifest(out_dir, "encoder-bench", cfg, &cfg.seeds)?;
    // Wall-clock figures go to a sidecar so the stats CSV is byte-identical
    // across re-runs of the same manifest.
    let mut csv = CsvWriter::create(
        &out_dir.join("encoder_bench.csv"),
        &[
            "seed",
            "encoder",
            "output_dim",
            "nnz_bound",
            "nnz_mean",
            "nnz_max",
            "density_max",
            "bound_satisfied",
        ],
    )?;
    let mut timing = CsvWriter::create(
        &out_dir.join("encoder_bench_timing.csv"),
        &["seed", "encoder", "encode_micros"],
    )?;
    for r in &report.rows {
        csv.row(&[
            r.seed.to_string(),
            r.encoder.clone(),
            r.output_dim.to_string(),
            r.nnz_bound.map_or(String::new(), |b| b.to_string()),
            fmt_f64(r.nnz_mean),
            r.nnz_max.to_string(),
            fmt_f64(r.density_max),
            u8::from(r.bound_satisfied).to_string(),
        ])?;
        timing.row(&[
            r.seed.to_string(),
            r.encoder.clone(),
            fmt_f64(r.encode_micros),
        ])?;
    }
    timing.finish()?;
    csv.finish()
}
