//! Experiment configuration: one TOML file per experiment, with CLI flags
//! overriding the file's values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use losse_core::agent::EpsilonSchedule;
use losse_core::encoding::{BinMode, LosseConfig};
use losse_core::error::{LosseError, Result};

fn default_workers() -> Option<usize> {
    None
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Stream-learning experiment over the piecewise random walk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamConfig {
    /// Correlation levels to sweep.
    pub d_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_stream_len")]
    pub stream_len: usize,
    #[serde(default = "default_holdout")]
    pub holdout: usize,
    #[serde(default = "default_tau")]
    pub tau: usize,
    #[serde(default = "default_stream_kappa")]
    pub kappa: usize,
    #[serde(default = "default_stream_rho")]
    pub rho: usize,
    #[serde(default = "default_stream_lambda")]
    pub lambda: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Also run the gradient-descent baseline on the same features.
    #[serde(default = "default_true")]
    pub with_sgd: bool,
    #[serde(default = "default_sgd_lr")]
    pub sgd_learning_rate: f64,
    #[serde(default = "default_sgd_batch")]
    pub sgd_batch: usize,
}

pub fn default_stream_len() -> usize {
    20_000
}

fn default_holdout() -> usize {
    500
}

fn default_tau() -> usize {
    50
}

fn default_stream_kappa() -> usize {
    10
}

fn default_stream_rho() -> usize {
    2
}

fn default_stream_lambda() -> usize {
    10
}

fn default_epsilon() -> f64 {
    1e-2
}

fn default_model_epsilon() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_sgd_lr() -> f64 {
    0.2
}

fn default_sgd_batch() -> usize {
    50
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            d_grid: vec![0.0, 0.5, 0.9, 0.98],
            seeds: (0..30).collect(),
            stream_len: default_stream_len(),
            holdout: default_holdout(),
            tau: default_tau(),
            kappa: default_stream_kappa(),
            rho: default_stream_rho(),
            lambda: default_stream_lambda(),
            epsilon: default_epsilon(),
            with_sgd: default_true(),
            sgd_learning_rate: default_sgd_lr(),
            sgd_batch: default_sgd_batch(),
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(LosseError::Config("seeds must be nonempty".into()));
        }
        for &d in &self.d_grid {
            if !(0.0..1.0).contains(&d) {
                return Err(LosseError::Config(format!(
                    "correlation level d must lie in [0, 1), got {d}"
                )));
            }
        }
        if self.stream_len == 0 || self.holdout == 0 {
            return Err(LosseError::Config(
                "stream_len and holdout must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Encoder over the scalar stream input.
    pub fn encoder(&self, seed: u64) -> LosseConfig {
        LosseConfig::new(1, self.kappa, self.rho, self.lambda, seed)
    }
}

/// Denoising benchmark comparing encoders under a shared nonzero budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenoiseExpConfig {
    pub patch_sides: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_max_images")]
    pub max_images: usize,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    /// Shared nonzero budget across encoders.
    #[serde(default = "default_budget")]
    pub nonzero_budget: usize,
    /// Lattice grids for the sparse encoder (budget / 2^rho).
    #[serde(default = "default_denoise_kappa")]
    pub kappa: usize,
    #[serde(default = "default_stream_rho")]
    pub rho: usize,
    /// Edges per axis swept for the sparse encoder and tile coding.
    #[serde(default = "default_lambda_sweep")]
    pub lambda_sweep: Vec<usize>,
    /// Projection scales swept for Fourier/ReLU.
    #[serde(default = "default_scale_sweep")]
    pub scale_sweep: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_gd_lr")]
    pub gd_learning_rate: f64,
    #[serde(default = "default_gd_batch")]
    pub gd_batch: usize,
    #[serde(default = "default_gd_epochs")]
    pub gd_epochs: usize,
    /// IDX corpus location; synthetic fallback when absent.
    #[serde(default)]
    pub dataset_path: Option<PathBuf>,
}

fn default_max_images() -> usize {
    10_000
}

fn default_noise_sigma() -> f64 {
    0.3
}

fn default_budget() -> usize {
    80
}

fn default_denoise_kappa() -> usize {
    20
}

fn default_lambda_sweep() -> Vec<usize> {
    vec![5, 6, 7, 8, 9]
}

fn default_scale_sweep() -> Vec<f64> {
    vec![0.1, 0.3, 0.5, 1.0, 5.0, 10.0]
}

fn default_gd_lr() -> f64 {
    0.01
}

fn default_gd_batch() -> usize {
    32
}

fn default_gd_epochs() -> usize {
    30
}

impl Default for DenoiseExpConfig {
    fn default() -> Self {
        DenoiseExpConfig {
            patch_sides: vec![3, 4, 5, 6, 7],
            seeds: (0..5).collect(),
            max_images: default_max_images(),
            noise_sigma: default_noise_sigma(),
            nonzero_budget: default_budget(),
            kappa: default_denoise_kappa(),
            rho: default_stream_rho(),
            lambda_sweep: default_lambda_sweep(),
            scale_sweep: default_scale_sweep(),
            epsilon: default_epsilon(),
            gd_learning_rate: default_gd_lr(),
            gd_batch: default_gd_batch(),
            gd_epochs: default_gd_epochs(),
            dataset_path: None,
        }
    }
}

impl DenoiseExpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(LosseError::Config("seeds must be nonempty".into()));
        }
        if self.patch_sides.is_empty() || self.lambda_sweep.is_empty() {
            return Err(LosseError::Config(
                "patch_sides and lambda_sweep must be nonempty".into(),
            ));
        }
        if self.kappa * (1 << self.rho) != self.nonzero_budget {
            return Err(LosseError::Config(format!(
                "kappa * 2^rho = {} must match the nonzero budget {}",
                self.kappa * (1 << self.rho),
                self.nonzero_budget
            )));
        }
        Ok(())
    }
}

/// Encoder micro-benchmark: sparsity statistics and throughput.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderBenchConfig {
    #[serde(default = "default_bench_input_dim")]
    pub input_dim: usize,
    #[serde(default = "default_bench_samples")]
    pub samples: usize,
    #[serde(default = "default_bench_kappa")]
    pub kappa: usize,
    #[serde(default = "default_stream_rho")]
    pub rho: usize,
    #[serde(default = "default_stream_lambda")]
    pub lambda: usize,
    #[serde(default = "default_seed_list")]
    pub seeds: Vec<u64>,
}

fn default_bench_input_dim() -> usize {
    6
}

fn default_bench_samples() -> usize {
    10_000
}

fn default_bench_kappa() -> usize {
    30
}

fn default_seed_list() -> Vec<u64> {
    vec![0]
}

impl Default for EncoderBenchConfig {
    fn default() -> Self {
        EncoderBenchConfig {
            input_dim: default_bench_input_dim(),
            samples: default_bench_samples(),
            kappa: default_bench_kappa(),
            rho: default_stream_rho(),
            lambda: default_stream_lambda(),
            seeds: default_seed_list(),
        }
    }
}

impl EncoderBenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.seeds.is_empty() {
            return Err(LosseError::Config(
                "samples and seeds must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

/// Closed-form vs gradient-descent comparison across sparsity levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdVsFtlConfig {
    #[serde(default = "default_lambda_grid")]
    pub lambda_grid: Vec<usize>,
    #[serde(default = "default_d_grid")]
    pub d_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_stream_len")]
    pub stream_len: usize,
    #[serde(default = "default_holdout")]
    pub holdout: usize,
    #[serde(default = "default_tau")]
    pub tau: usize,
    #[serde(default = "default_stream_kappa")]
    pub kappa: usize,
    #[serde(default = "default_stream_rho")]
    pub rho: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_sgd_lr")]
    pub gd_learning_rate: f64,
    #[serde(default = "default_sgd_batch")]
    pub gd_batch: usize,
}

fn default_lambda_grid() -> Vec<usize> {
    vec![10, 20, 30]
}

fn default_d_grid() -> Vec<f64> {
    vec![0.0, 0.5, 0.9, 0.98]
}

impl Default for GdVsFtlConfig {
    fn default() -> Self {
        GdVsFtlConfig {
            lambda_grid: default_lambda_grid(),
            d_grid: default_d_grid(),
            seeds: (0..10).collect(),
            stream_len: default_stream_len(),
            holdout: default_holdout(),
            tau: default_tau(),
            kappa: default_stream_kappa(),
            rho: default_stream_rho(),
            epsilon: default_epsilon(),
            gd_learning_rate: default_sgd_lr(),
            gd_batch: default_sgd_batch(),
        }
    }
}

impl GdVsFtlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() || self.lambda_grid.is_empty() || self.d_grid.is_empty() {
            return Err(LosseError::Config(
                "seeds, lambda_grid and d_grid must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

/// Which environment a planning run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Gridworld,
    MountainCar,
    Acrobot,
}

/// Planning experiment: paired planning and model-free arms across seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynaExpConfig {
    pub env: EnvKind,
    pub seeds: Vec<u64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_k")]
    pub interactions_per_epoch: usize,
    #[serde(default = "default_n")]
    pub planning_steps: usize,
    #[serde(default = "default_g")]
    pub learning_steps: usize,
    #[serde(default = "default_unroll")]
    pub unroll_length: usize,
    #[serde(default = "default_model_interval")]
    pub model_update_interval: usize,
    #[serde(default = "default_real_interval")]
    pub real_update_interval: usize,
    #[serde(default = "default_planning_batch")]
    pub planning_batch: usize,
    #[serde(default = "default_planning_per_real")]
    pub planning_per_real: usize,
    #[serde(default = "default_capacity")]
    pub model_buffer_capacity: usize,
    /// Model encoder geometry.
    #[serde(default = "default_model_kappa")]
    pub model_kappa: usize,
    #[serde(default = "default_stream_rho")]
    pub model_rho: usize,
    #[serde(default = "default_stream_lambda")]
    pub model_lambda: usize,
    #[serde(default = "default_model_epsilon")]
    pub model_epsilon: f64,
    /// Agent encoder geometry and hyperparameters.
    #[serde(default = "default_agent_kappa")]
    pub agent_kappa: usize,
    #[serde(default = "default_stream_rho")]
    pub agent_rho: usize,
    #[serde(default = "default_agent_lambda")]
    pub agent_lambda: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_alpha")]
    pub agent_learning_rate: f64,
    /// Fraction of the interaction budget over which epsilon decays.
    #[serde(default = "default_eps_frac")]
    pub epsilon_decay_fraction: f64,
    #[serde(default = "default_eps_end")]
    pub epsilon_end: f64,
    /// `(random_policy_return, best_known_return)` per environment.
    #[serde(default)]
    pub return_norm: Option<(f64, f64)>,
    #[serde(default = "default_probe_dim")]
    pub probe_per_dim: usize,
    #[serde(default = "default_error_delta")]
    pub error_delta: f64,
    #[serde(default = "default_error_epochs")]
    pub error_eval_epochs: usize,
    /// Also run the model-free arm for comparison.
    #[serde(default = "default_true")]
    pub with_model_free: bool,
    /// Write the final error map CSV per run.
    #[serde(default)]
    pub export_error_map: bool,
}

fn default_epochs() -> usize {
    2000
}

fn default_k() -> usize {
    25
}

fn default_n() -> usize {
    4
}

fn default_g() -> usize {
    0
}

fn default_unroll() -> usize {
    5
}

fn default_model_interval() -> usize {
    25
}

fn default_real_interval() -> usize {
    4
}

fn default_planning_batch() -> usize {
    32
}

fn default_planning_per_real() -> usize {
    16
}

fn default_capacity() -> usize {
    100_000
}

fn default_model_kappa() -> usize {
    30
}

fn default_agent_kappa() -> usize {
    10
}

fn default_agent_lambda() -> usize {
    8
}

fn default_gamma() -> f64 {
    0.95
}

fn default_alpha() -> f64 {
    0.25
}

fn default_eps_frac() -> f64 {
    0.2
}

fn default_eps_end() -> f64 {
    0.1
}

fn default_probe_dim() -> usize {
    20
}

fn default_error_delta() -> f64 {
    0.05
}

fn default_error_epochs() -> usize {
    100
}

impl DynaExpConfig {
    pub fn gridworld_defaults() -> Self {
        DynaExpConfig {
            env: EnvKind::Gridworld,
            seeds: (0..30).collect(),
            epochs: default_epochs(),
            interactions_per_epoch: default_k(),
            planning_steps: default_n(),
            learning_steps: default_g(),
            unroll_length: default_unroll(),
            model_update_interval: default_model_interval(),
            real_update_interval: default_real_interval(),
            planning_batch: default_planning_batch(),
            planning_per_real: default_planning_per_real(),
            model_buffer_capacity: default_capacity(),
            model_kappa: default_model_kappa(),
            model_rho: default_stream_rho(),
            model_lambda: default_stream_lambda(),
            model_epsilon: default_model_epsilon(),
            agent_kappa: default_agent_kappa(),
            agent_rho: default_stream_rho(),
            agent_lambda: default_agent_lambda(),
            gamma: default_gamma(),
            agent_learning_rate: default_alpha(),
            epsilon_decay_fraction: default_eps_frac(),
            epsilon_end: default_eps_end(),
            return_norm: None,
            probe_per_dim: default_probe_dim(),
            error_delta: default_error_delta(),
            error_eval_epochs: default_error_epochs(),
            with_model_free: default_true(),
            export_error_map: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(LosseError::Config("seeds must be nonempty".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return Err(LosseError::Config(
                "epsilon_decay_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Default normalization constants per environment: random-policy
    /// return vs best-known return at the default episode caps.
    pub fn resolved_return_norm(&self) -> (f64, f64) {
        self.return_norm.unwrap_or(match self.env {
            EnvKind::Gridworld => (0.0, 1.0),
            EnvKind::MountainCar => (-200.0, -90.0),
            EnvKind::Acrobot => (-500.0, -70.0),
        })
    }

    pub fn total_budget(&self) -> usize {
        self.epochs * self.interactions_per_epoch
    }

    pub fn epsilon_schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            start: 1.0,
            end: self.epsilon_end,
            decay_steps: ((self.total_budget() as f64) * self.epsilon_decay_fraction) as u64,
        }
    }
}

/// Top-level experiment file: exactly one experiment section per file.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ExperimentFile {
    #[serde(default)]
    pub stream: Option<StreamConfig>,
    #[serde(default)]
    pub denoise: Option<DenoiseExpConfig>,
    #[serde(default)]
    pub encoder_bench: Option<EncoderBenchConfig>,
    #[serde(default)]
    pub gd_vs_ftl: Option<GdVsFtlConfig>,
    #[serde(default)]
    pub dyna: Option<DynaExpConfig>,
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| LosseError::Config(format!("{}: {e}", path.display())))
    }
}

/// Flags shared by every experiment verb; flags win over file values.
#[derive(Debug, Clone)]
pub struct CommonOpts {
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub dataset_path: Option<PathBuf>,
}

impl Default for CommonOpts {
    fn default() -> Self {
        CommonOpts {
            out: default_out(),
            workers: default_workers(),
            seeds: None,
            dataset_path: None,
        }
    }
}

/// Bin mode is fixed per build of an encoder; exposed for config files.
pub fn parse_bin_mode(s: &str) -> Result<BinMode> {
    match s {
        "interpolation" => Ok(BinMode::Interpolation),
        "distance" => Ok(BinMode::Distance),
        other => Err(LosseError::Config(format!("unknown bin mode {other}"))),
    }
}
