use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use losse_cli::config::{
    CommonOpts, DenoiseExpConfig, DynaExpConfig, EncoderBenchConfig, ExperimentFile, GdVsFtlConfig,
    StreamConfig,
};
use losse_cli::experiments::{denoise, dyna, encoder_bench, gd_vs_ftl, stream};
use losse_cli::plot::{collect_inputs, plot_to_file, PlotKind};
use losse_core::error::Result;
use losse_core::parallel::with_workers;

#[derive(Parser)]
#[command(
    name = "losse",
    version,
    about = "Online no-forgetting regression and world-model experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config file (TOML); defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV reports and the manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the seed fan-out; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Seeds, overriding the config file.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// IDX digit corpus (file or directory); synthetic fallback when absent.
    #[arg(long)]
    dataset_path: Option<PathBuf>,
}

impl Common {
    fn opts(&self) -> CommonOpts {
        CommonOpts {
            out: self.out.clone(),
            workers: self.workers,
            seeds: self.seed.clone(),
            dataset_path: self.dataset_path.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Online regression on the nonstationary piecewise-random-walk stream.
    Stream(Common),
    /// Image denoising benchmark across encoder families.
    Denoise(Common),
    /// Encoder sparsity and throughput micro-benchmark.
    EncoderBench(Common),
    /// Closed-form vs gradient-descent updates on identical features.
    GdVsFtl(Common),
    /// Planning vs model-free arms on a control environment.
    Dyna(Common),
    /// Render learning curves (mean with standard-error bands) to SVG.
    Plot {
        /// Metrics CSVs to plot.
        files: Vec<PathBuf>,
        /// Directory holding metrics_*.csv files.
        #[arg(long)]
        dir: Option<PathBuf>,
        /// Output SVG path.
        #[arg(long, default_value = "curves.svg")]
        out: PathBuf,
        /// X axis: environment steps or model-update wall time.
        #[arg(long, default_value = "steps")]
        x: String,
    },
}

fn load_file(path: &Option<PathBuf>) -> Result<ExperimentFile> {
    match path {
        Some(p) => ExperimentFile::load(p),
        None => Ok(ExperimentFile::default()),
    }
}

fn run_stream_cmd(common: &Common) -> Result<()> {
    let opts = common.opts();
    let mut cfg: StreamConfig = load_file(&common.config)?.stream.unwrap_or_default();
    if let Some(seeds) = &opts.seeds {
        cfg.seeds = seeds.clone();
    }
    let report = with_workers(opts.workers, || stream::run_stream(&cfg))?;
    stream::write_report(&report, &cfg, &opts.out)?;
    for row in &report.summary {
        println!(
            "d={} {}: mse {:.6} +- {:.6}",
            row.d, row.method, row.mse_mean, row.mse_stderr
        );
    }
    println!("reports written to {}", opts.out.display());
    Ok(())
}

fn run_denoise_cmd(common: &Common) -> Result<()> {
    let opts = common.opts();
    let mut cfg: DenoiseExpConfig = load_file(&common.config)?.denoise.unwrap_or_default();
    if let Some(seeds) = &opts.seeds {
        cfg.seeds = seeds.clone();
    }
    if opts.dataset_path.is_some() {
        cfg.dataset_path = opts.dataset_path.clone();
    }
    let report = with_workers(opts.workers, || denoise::run_denoise(&cfg))?;
    denoise::write_report(&report, &cfg, &opts.out)?;
    println!(
        "corpus: {}",
        if report.real_corpus {
            "real"
        } else {
            "synthetic fallback"
        }
    );
    for row in &report.summary {
        println!(
            "patch {:>2} {:<9} mse {:.5} +- {:.5}",
            row.patch_side * row.patch_side,
            row.encoder,
            row.mse_mean,
            row.mse_stderr
        );
    }
    println!("reports written to {}", opts.out.display());
    Ok(())
}

fn run_encoder_bench_cmd(common: &Common) -> Result<()> {
    let opts = common.opts();
    let mut cfg: EncoderBenchConfig = load_file(&common.config)?.encoder_bench.unwrap_or_default();
    if let Some(seeds) = &opts.seeds {
        cfg.seeds = seeds.clone();
    }
    let report = with_workers(opts.workers, || encoder_bench::run_encoder_bench(&cfg))?;
    encoder_bench::write_report(&report, &cfg, &opts.out)?;
    for row in &report.rows {
        println!(
            "seed {} {:<9} dim {:>6} nnz mean {:>7.2} max {:>4} bound ok {} ({:.2} us/encode)",
            row.seed,
            row.encoder,
            row.output_dim,
            row.nnz_mean,
            row.nnz_max,
            row.bound_satisfied,
            row.encode_micros
        );
    }
    println!("reports written to {}", opts.out.display());
    Ok(())
}

fn run_gd_vs_ftl_cmd(common: &Common) -> Result<()> {
    let opts = common.opts();
    let mut cfg: GdVsFtlConfig = load_file(&common.config)?.gd_vs_ftl.unwrap_or_default();
    if let Some(seeds) = &opts.seeds {
        cfg.seeds = seeds.clone();
    }
    let report = with_workers(opts.workers, || gd_vs_ftl::run_gd_vs_ftl(&cfg))?;
    gd_vs_ftl::write_report(&report, &cfg, &opts.out)?;
    for row in &report.rows {
        println!(
            "lambda={:<3} d={:<5} {}: mse {:.6} +- {:.6}",
            row.lambda, row.d, row.method, row.mse_mean, row.mse_stderr
        );
    }
    println!("reports written to {}", opts.out.display());
    Ok(())
}

fn run_dyna_cmd(common: &Common) -> Result<()> {
    let opts = common.opts();
    let mut cfg: DynaExpConfig = load_file(&common.config)?
        .dyna
        .unwrap_or_else(DynaExpConfig::gridworld_defaults);
    if let Some(seeds) = &opts.seeds {
        cfg.seeds = seeds.clone();
    }
    let report = with_workers(opts.workers, || dyna::run_experiment(&cfg))?;
    dyna::write_report(&report, &cfg, &opts.out)?;
    for arm in [dyna::ARM_DYNA, dyna::ARM_MODEL_FREE] {
        let finals = report.final_returns(arm);
        if !finals.is_empty() {
            println!(
                "{arm}: mean final normalized return {:.4} over {} seeds",
                report.mean_final_return(arm),
                finals.len()
            );
        }
    }
    println!("reports written to {}", opts.out.display());
    Ok(())
}

fn run_plot_cmd(files: &[PathBuf], dir: Option<&PathBuf>, out: &PathBuf, x: &str) -> Result<()> {
    let kind = match x {
        "steps" => PlotKind::Steps,
        "walltime" => PlotKind::WallTime,
        other => {
            return Err(losse_core::LosseError::Config(format!(
                "unknown x axis {other}; use steps or walltime"
            )))
        }
    };
    let inputs = collect_inputs(dir.map(|d| d.as_path()), files)?;
    plot_to_file(&inputs, kind, out)?;
    println!("plot written to {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Stream(c) => run_stream_cmd(c),
        Command::Denoise(c) => run_denoise_cmd(c),
        Command::EncoderBench(c) => run_encoder_bench_cmd(c),
        Command::GdVsFtl(c) => run_gd_vs_ftl_cmd(c),
        Command::Dyna(c) => run_dyna_cmd(c),
        Command::Plot { files, dir, out, x } => run_plot_cmd(files, dir.as_ref(), out, x),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
