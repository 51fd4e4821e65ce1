//! Planning experiment: paired planning and model-free arms across seeds,
//! with per-run metrics/timing CSVs and an aggregate summary.

use std::path::Path;

use losse_core::agent::{QAgent, QAgentConfig};
use losse_core::dyna::{run_dyna, DynaConfig, DynaRunResult};
use losse_core::encoding::LosseConfig;
use losse_core::env::{Acrobot, Environment, Gridworld, GridworldConfig, MountainCar};
use losse_core::error::Result;
use losse_core::parallel::par_map;
use losse_core::util::{derive_seed, mean, stderr};
use losse_core::world_model::{WorldModel, WorldModelConfig};

use crate::config::{DynaExpConfig, EnvKind};
use crate::report::{fmt_f64, write_manifest, CsvWriter};

pub const ARM_DYNA: &str = "dyna";
pub const ARM_MODEL_FREE: &str = "model-free";

#[derive(Debug, Clone)]
pub struct DynaRun {
    pub arm: &'static str,
    pub seed: u64,
    pub result: DynaRunResult,
}

#[derive(Debug, Clone)]
pub struct DynaReport {
    pub runs: Vec<DynaRun>,
}

impl DynaReport {
    pub fn final_returns(&self, arm: &str) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.arm == arm && r.result.final_normalized_return.is_finite())
            .map(|r| r.result.final_normalized_return)
            .collect()
    }

    pub fn mean_final_return(&self, arm: &str) -> f64 {
        mean(&self.final_returns(arm))
    }

    pub fn error_fractions(&self, arm: &str) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.arm == arm)
            .filter_map(|r| r.result.final_error_map.as_ref())
            .map(|m| m.flagged_fraction_visited)
            .filter(|f| f.is_finite())
            .collect()
    }
}

fn build_env(kind: EnvKind, seed: u64) -> Box<dyn Environment + Send> {
    match kind {
        EnvKind::Gridworld => Box::new(Gridworld::new(GridworldConfig {
            seed,
            ..GridworldConfig::default()
        })),
        EnvKind::MountainCar => Box::new(MountainCar::new(seed, 200)),
        EnvKind::Acrobot => Box::new(Acrobot::new(seed, 500)),
    }
}

/// Builds the three seeded components and runs one arm.
pub fn run_one(cfg: &DynaExpConfig, arm: &'static str, seed: u64) -> Result<DynaRun> {
    let mut env = build_env(cfg.env, derive_seed(seed, 0x656e76));
    let spec = env.spec().clone();
    let mut agent = QAgent::new(QAgentConfig {
        encoder: LosseConfig::new(
            spec.state_dim,
            cfg.agent_kappa,
            cfg.agent_rho,
            cfg.agent_lambda,
            derive_seed(seed, 0x6167),
        ),
        action_count: spec.action_count,
        gamma: cfg.gamma,
        learning_rate: cfg.agent_learning_rate,
        epsilon: cfg.epsilon_schedule(),
        state_bounds: spec.state_bounds.clone(),
        seed: derive_seed(seed, 0x7167),
    })?;
    let mut model = WorldModel::new(
        LosseConfig::new(
            spec.state_dim + spec.action_count,
            cfg.model_kappa,
            cfg.model_rho,
            cfg.model_lambda,
            derive_seed(seed, 0x6d6f),
        ),
        WorldModelConfig {
            dt: 1.0,
            epsilon: cfg.model_epsilon,
            state_bounds: spec.state_bounds.clone(),
            action_dim: spec.action_count,
        },
    )?;
    let mut run_cfg = DynaConfig {
        epochs: cfg.epochs,
        interactions_per_epoch: cfg.interactions_per_epoch,
        planning_steps: cfg.planning_steps,
        learning_steps: cfg.learning_steps,
        unroll_length: cfg.unroll_length,
        model_update_interval: cfg.model_update_interval,
        real_update_interval: cfg.real_update_interval,
        planning_batch: cfg.planning_batch,
        planning_per_real: cfg.planning_per_real,
        model_buffer_capacity: cfg.model_buffer_capacity,
        model_enabled: true,
        seed: derive_seed(seed, 0x6c6f6f70),
        return_norm: cfg.resolved_return_norm(),
        probe_per_dim: if spec.state_dim <= 3 {
            cfg.probe_per_dim
        } else {
            0
        },
        error_delta: cfg.error_delta,
        error_eval_epochs: cfg.error_eval_epochs,
    };
    if arm == ARM_MODEL_FREE {
        run_cfg = run_cfg.model_free_arm();
    }
    let result = run_dyna(env.as_mut(), &mut agent, &mut model, &run_cfg)?;
    Ok(DynaRun { arm, seed, result })
}

pub fn run_experiment(cfg: &DynaExpConfig) -> Result<DynaReport> {
    cfg.validate()?;
    let mut jobs: Vec<(&'static str, u64)> = cfg.seeds.iter().map(|&s| (ARM_DYNA, s)).collect();
    if cfg.with_model_free {
        jobs.extend(cfg.seeds.iter().map(|&s| (ARM_MODEL_FREE, s)));
    }
    let results = par_map(jobs, |(arm, seed)| run_one(cfg, arm, seed));
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DynaReport { runs })
}

pub fn write_report(report: &DynaReport, cfg: &DynaExpConfig, out_dir: &Path) -> Result<()> {
    write_manifest(out_dir, "dyna", cfg, &cfg.seeds)?;
    for run in &report.runs {
        let mut metrics = CsvWriter::create(
            &out_dir.join(format!("metrics_{}_seed{}.csv", run.arm, run.seed)),
            &[
                "arm",
                "seed",
                "step",
                "episode",
                "return",
                "normalized_return",
                "model_error_fraction",
            ],
        )?;
        for row in &run.result.episodes {
            metrics.row(&[
                run.arm.to_string(),
                run.seed.to_string(),
                row.step.to_string(),
                row.episode.to_string(),
                fmt_f64(row.episode_return),
                fmt_f64(row.normalized_return),
                fmt_f64(row.model_error_fraction),
            ])?;
        }
        metrics.finish()?;
        // Wall-clock sidecar; excluded from byte-determinism guarantees.
        let mut timing = CsvWriter::create(
            &out_dir.join(format!("timing_{}_seed{}.csv", run.arm, run.seed)),
            &["arm", "seed", "step", "observe_micros", "cum_update_ms"],
        )?;
        for row in &run.result.timings {
            timing.row(&[
                run.arm.to_string(),
                run.seed.to_string(),
                row.step.to_string(),
                fmt_f64(row.observe_micros),
                fmt_f64(row.cum_update_ms),
            ])?;
        }
        timing.finish()?;
        if cfg.export_error_map {
            if let Some(map) = &run.result.final_error_map {
                let path = out_dir.join(format!("error_map_{}_seed{}.csv", run.arm, run.seed));
                let mut file = std::fs::File::create(path)?;
                map.write_csv(&mut file)?;
            }
        }
    }
    let mut summary = CsvWriter::create(
        &out_dir.join("dyna_summary.csv"),
        &[
            "arm",
            "seed",
            "episodes",
            "final_normalized_return",
            "model_error_fraction",
            "observe_calls",
            "rollout_incidents",
        ],
    )?;
    for run in &report.runs {
        let err = run
            .result
            .final_error_map
            .as_ref()
            .map_or(f64::NAN, |m| m.flagged_fraction_visited);
        summary.row(&[
            run.arm.to_string(),
            run.seed.to_string(),
            run.result.episodes.len().to_string(),
            fmt_f64(run.result.final_normalized_return),
            fmt_f64(err),
            run.result.observe_calls.to_string(),
            run.result.rollout_incidents.to_string(),
        ])?;
    }
    summary.finish()?;
    let mut agg = CsvWriter::create(
        &out_dir.join("dyna_aggregate.csv"),
        &["arm", "mean_final_normalized_return", "stderr", "runs"],
    )?;
    for arm in [ARM_DYNA, ARM_MODEL_FREE] {
        let finals = report.final_returns(arm);
        if finals.is_empty() {
            continue;
        }
        agg.row(&[
            arm.to_string(),
            fmt_f64(mean(&finals)),
            fmt_f64(stderr(&finals)),
            finals.len().to_string(),
        ])?;
    }
    agg.finish()
}
