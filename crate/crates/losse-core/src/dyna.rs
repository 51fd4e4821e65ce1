//! Planning loop: interleaves environment interaction, online model
//! updates, search-control sampling, model unrolls into a synthetic buffer,
//! and agent learning from model experiences.

use std::collections::{HashSet, VecDeque};
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::QAgent;
use crate::env::{EnvSpec, Environment};
use crate::error::{LosseError, Result};
use crate::util::derive_seed;
use crate::world_model::{Transition, WorldModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynaConfig {
    /// Outer epochs; total interaction budget is `epochs * interactions_per_epoch`.
    pub epochs: usize,
    pub interactions_per_epoch: usize,
    /// Unrolls per epoch feeding the synthetic buffer.
    pub planning_steps: usize,
    /// Agent batch updates per epoch drawn from the synthetic buffer.
    pub learning_steps: usize,
    pub unroll_length: usize,
    /// Environment steps between model update flushes.
    #[serde(default = "default_model_interval")]
    pub model_update_interval: usize,
    /// Interactions between direct agent updates on real transitions.
    #[serde(default = "default_real_interval")]
    pub real_update_interval: usize,
    /// Transitions per agent batch update.
    #[serde(default = "default_planning_batch")]
    pub planning_batch: usize,
    /// Planning-driven agent updates after each direct real-data update.
    #[serde(default = "default_planning_per_real")]
    pub planning_per_real: usize,
    #[serde(default = "default_buffer_capacity")]
    pub model_buffer_capacity: usize,
    /// Disabled for the model-free arm: no model updates, no planning.
    #[serde(default = "default_true")]
    pub model_enabled: bool,
    pub seed: u64,
    /// `(random_policy_return, best_known_return)` for return normalization.
    pub return_norm: (f64, f64),
    /// Probe-grid resolution per state dimension for model-error maps;
    /// 0 disables error evaluation.
    #[serde(default = "default_probe")]
    pub probe_per_dim: usize,
    /// Prediction-error threshold for flagging probe cells.
    #[serde(default = "default_delta")]
    pub error_delta: f64,
    /// Epochs between model-error evaluations.
    #[serde(default = "default_error_interval")]
    pub error_eval_epochs: usize,
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

fn default_buffer_capacity() -> usize {
    100_000
}

fn default_true() -> bool {
    true
}

fn default_probe() -> usize {
    20
}

fn default_delta() -> f64 {
    0.05
}

fn default_error_interval() -> usize {
    20
}

impl DynaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.interactions_per_epoch == 0 {
            return Err(LosseError::Config(
                "epochs and interactions_per_epoch must be positive".into(),
            ));
        }
        if self.unroll_length == 0 {
            return Err(LosseError::Config(
                "unroll_length must be at least 1".into(),
            ));
        }
        if self.model_update_interval == 0 || self.real_update_interval == 0 {
            return Err(LosseError::Config(
                "model_update_interval and real_update_interval must be at least 1".into(),
            ));
        }
        if self.planning_batch == 0 || self.model_buffer_capacity == 0 {
            return Err(LosseError::Config(
                "planning_batch and model_buffer_capacity must be positive".into(),
            ));
        }
        if !(self.return_norm.1 > self.return_norm.0) {
            return Err(LosseError::Config(format!(
                "return_norm must satisfy best > random, got {:?}",
                self.return_norm
            )));
        }
        if !(self.error_delta >= 0.0) {
            return Err(LosseError::Config("error_delta must be nonnegative".into()));
        }
        if self.error_eval_epochs == 0 {
            return Err(LosseError::Config(
                "error_eval_epochs must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The same loop with everything model-related switched off.
    pub fn model_free_arm(&self) -> Self {
        DynaConfig {
            planning_steps: 0,
            learning_steps: 0,
            planning_per_real: 0,
            model_enabled: false,
            ..self.clone()
        }
    }
}

/// Ring buffer of synthetic transitions with FIFO eviction.
#[derive(Debug, Clone)]
pub struct ModelBuffer {
    data: VecDeque<Transition>,
    capacity: usize,
}

impl ModelBuffer {
    pub fn new(capacity: usize) -> Self {
        ModelBuffer {
            data: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
        }
    }

    pub fn push(&mut self, tr: Transition) {
        if self.data.len() == self.capacity {
            self.data.pop_front();
        }
        self.data.push_back(tr);
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<&Transition> {
        (0..count)
            .map(|_| &self.data[rng.random_range(0..self.data.len())])
            .collect()
    }
}

/// One completed episode in the metrics stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub step: u64,
    pub episode: u64,
    pub episode_return: f64,
    pub normalized_return: f64,
    /// Latest model-error fraction over visited probe cells; NaN before the
    /// first evaluation and in model-free arms.
    pub model_error_fraction: f64,
}

/// Wall-clock accounting for one model-update flush.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub step: u64,
    /// Mean wall time per `observe` call in this flush, microseconds.
    pub observe_micros: f64,
    /// Total model-update wall time so far, milliseconds.
    pub cum_update_ms: f64,
}

#[derive(Debug, Clone)]
pub struct DynaRunResult {
    pub episodes: Vec<EpisodeRow>,
    pub timings: Vec<TimingRow>,
    pub final_error_map: Option<ErrorMap>,
    /// Number of `observe` calls accepted by the model.
    pub observe_calls: u64,
    /// Real transitions generated by the environment.
    pub transitions_seen: u64,
    /// Rollouts truncated or skipped because the model state went non-finite.
    pub rollout_incidents: u64,
    /// Mean normalized return over episodes finishing in the last quarter
    /// of the interaction budget (NaN when no episode finished there).
    pub final_normalized_return: f64,
}

/// Per-cell model-prediction error against a noise-free environment copy.
#[derive(Debug, Clone)]
pub struct ErrorCell {
    pub state: Vec<f64>,
    pub action: usize,
    pub error: f64,
    pub flagged: bool,
    pub visited: bool,
}

#[derive(Debug, Clone)]
pub struct ErrorMap {
    pub cells: Vec<ErrorCell>,
    pub delta: f64,
    pub flagged_fraction_all: f64,
    /// Flagged fraction restricted to cells whose grid cell contains at
    /// least one visited state; NaN when nothing was visited.
    pub flagged_fraction_visited: f64,
}

impl ErrorMap {
    /// CSV export: one row per probe cell.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let dims = self.cells.first().map_or(0, |c| c.state.len());
        let mut header: Vec<String> = (0..dims).map(|d| format!("s{d}")).collect();
        header.extend([
            "action".to_string(),
            "error".to_string(),
            "flagged".to_string(),
            "visited".to_string(),
        ]);
        writeln!(w, "{}", header.join(","))?;
        for cell in &self.cells {
            let mut fields: Vec<String> = cell.state.iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{}", cell.action));
            fields.push(format!("{}", cell.error));
            fields.push(format!("{}", u8::from(cell.flagged)));
            fields.push(format!("{}", u8::from(cell.visited)));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Centers of a regular `per_dim`-cells-per-dimension grid over the state
/// bounds. Only sensible for low-dimensional state spaces.
pub fn probe_grid(spec: &EnvSpec, per_dim: usize) -> Vec<Vec<f64>> {
    let dims = spec.state_dim;
    let total = per_dim.pow(dims as u32);
    let mut out = Vec::with_capacity(total);
    for mut flat in 0..total {
        let mut state = vec![0.0; dims];
        for d in (0..dims).rev() {
            let cell = flat % per_dim;
            flat /= per_dim;
            let (lo, hi) = spec.state_bounds[d];
            state[d] = lo + (cell as f64 + 0.5) * (hi - lo) / per_dim as f64;
        }
        out.push(state);
    }
    out
}

fn cell_coords(state: &[f64], spec: &EnvSpec, per_dim: usize) -> Vec<usize> {
    state
        .iter()
        .zip(&spec.state_bounds)
        .map(|(v, &(lo, hi))| {
            let cell = ((v - lo) / (hi - lo) * per_dim as f64).floor() as isize;
            cell.clamp(0, per_dim as isize - 1) as usize
        })
        .collect()
}

/// Scores model predictions on `probe_states` x all actions against the
/// environment's noise-free transition, flagging cells whose Euclidean
/// error exceeds `delta`.
pub fn evaluate_model_error<E: Environment + ?Sized>(
    model: &WorldModel,
    env: &E,
    probe_states: &[Vec<f64>],
    visited: &[Vec<f64>],
    per_dim: usize,
    delta: f64,
) -> Result<ErrorMap> {
    let spec = env.spec();
    let visited_cells: HashSet<Vec<usize>> = visited
        .iter()
        .map(|s| cell_coords(s, spec, per_dim))
        .collect();
    let mut cells = Vec::with_capacity(probe_states.len() * spec.action_count);
    let mut flagged_all = 0usize;
    let mut visited_total = 0usize;
    let mut flagged_visited = 0usize;
    for state in probe_states {
        let was_visited = visited_cells.contains(&cell_coords(state, spec, per_dim));
        for action in 0..spec.action_count {
            let mut one_hot = vec![0.0; spec.action_count];
            one_hot[action] = 1.0;
            let (pred, _) = model.predict_next(state, &one_hot)?;
            let (truth, _) = env.ideal_step(state, action);
            let error = pred
                .iter()
                .zip(&truth)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                .sqrt();
            let flagged = error > delta;
            flagged_all += usize::from(flagged);
            if was_visited {
                visited_total += 1;
                flagged_visited += usize::from(flagged);
            }
            cells.push(ErrorCell {
                state: state.clone(),
                action,
                error,
                flagged,
                visited: was_visited,
            });
        }
    }
    let total = cells.len().max(1);
    Ok(ErrorMap {
        cells,
        delta,
        flagged_fraction_all: flagged_all as f64 / total as f64,
        flagged_fraction_visited: if visited_total > 0 {
            flagged_visited as f64 / visited_total as f64
        } else {
            f64::NAN
        },
    })
}

fn one_hot(index: usize, count: usize) -> Vec<f64> {
    let mut v = vec![0.0; count];
    v[index] = 1.0;
    v
}

/// Runs the full planning loop. The caller provides a freshly seeded
/// environment, agent and model; identical inputs produce identical
/// metrics streams.
pub fn run_dyna<E: Environment + ?Sized>(
    env: &mut E,
    agent: &mut QAgent,
    model: &mut WorldModel,
    cfg: &DynaConfig,
) -> Result<DynaRunResult> {
    cfg.validate()?;
    let spec = env.spec().clone();
    let mut plan_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0x706c616e));
    let mut buffer = ModelBuffer::new(cfg.model_buffer_capacity);
    let mut visited: Vec<Vec<f64>> = Vec::new();
    let mut pending: Vec<Transition> = Vec::new();

    let mut episodes = Vec::new();
    let mut timings = Vec::new();
    let mut observe_calls = 0u64;
    let mut transitions_seen = 0u64;
    let mut rollout_incidents = 0u64;
    let mut cum_update_ms = 0.0f64;
    let mut latest_error_fraction = f64::NAN;

    let total_steps = (cfg.epochs * cfg.interactions_per_epoch) as u64;
    let norm_span = cfg.return_norm.1 - cfg.return_norm.0;

    let mut state = env.reset();
    let mut episode_return = 0.0f64;
    let mut episode_index = 0u64;
    let mut step = 0u64;
    let mut since_real_update = 0usize;

    let probe = if cfg.probe_per_dim > 0 && cfg.model_enabled {
        probe_grid(&spec, cfg.probe_per_dim)
    } else {
        Vec::new()
    };

    let flush = |pending: &mut Vec<Transition>,
                 model: &mut WorldModel,
                 observe_calls: &mut u64,
                 cum_update_ms: &mut f64,
                 timings: &mut Vec<TimingRow>,
                 step: u64|
     -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let count = pending.len();
        let start = Instant::now();
        for tr in pending.drain(..) {
            model.observe(&tr)?;
            *observe_calls += 1;
        }
        let elapsed = start.elapsed();
        *cum_update_ms += elapsed.as_secs_f64() * 1e3;
        timings.push(TimingRow {
            step,
            observe_micros: elapsed.as_secs_f64() * 1e6 / count as f64,
            cum_update_ms: *cum_update_ms,
        });
        Ok(())
    };

    for epoch in 0..cfg.epochs {
        for _ in 0..cfg.interactions_per_epoch {
            step += 1;
            let action = agent.act(&state, false)?;
            agent.note_interaction();
            let out = env.step(action)?;
            transitions_seen += 1;
            episode_return += out.reward;
            visited.push(state.clone());
            let tr = Transition::discrete(
                state.clone(),
                action,
                spec.action_count,
                out.reward,
                out.state.clone(),
            );
            if cfg.model_enabled {
                pending.push(tr.clone());
                if pending.len() >= cfg.model_update_interval {
                    flush(
                        &mut pending,
                        model,
                        &mut observe_calls,
                        &mut cum_update_ms,
                        &mut timings,
                        step,
                    )?;
                }
            }
            since_real_update += 1;
            if since_real_update >= cfg.real_update_interval {
                since_real_update = 0;
                agent.q_update(&tr.state, action, out.reward, &out.state, out.terminated)?;
                for _ in 0..cfg.planning_per_real {
                    if buffer.is_empty() {
                        break;
                    }
                    let batch: Vec<(Vec<f64>, usize, f64, Vec<f64>, bool)> = buffer
                        .sample(&mut plan_rng, cfg.planning_batch)
                        .into_iter()
                        .map(|t| {
                            let a = t.action.iter().position(|v| *v == 1.0).unwrap_or(0);
                            (t.state.clone(), a, t.reward, t.next_state.clone(), false)
                        })
                        .collect();
                    agent.q_update_batch(&batch)?;
                }
            }
            if out.done() {
                episodes.push(EpisodeRow {
                    step,
                    episode: episode_index,
                    episode_return,
                    normalized_return: (episode_return - cfg.return_norm.0) / norm_span,
                    model_error_fraction: latest_error_fraction,
                });
                episode_index += 1;
                episode_return = 0.0;
                state = env.reset();
            } else {
                state = out.state;
            }
        }
        // Absorb any partial batch so every real transition enters the
        // model exactly once per epoch boundary.
        if cfg.model_enabled {
            flush(
                &mut pending,
                model,
                &mut observe_calls,
                &mut cum_update_ms,
                &mut timings,
                step,
            )?;
        }
        // Planning: uniform search control over visited states, on-policy
        // unrolls pushed into the synthetic buffer.
        if cfg.model_enabled && !visited.is_empty() {
            let epsilon = agent.epsilon();
            for _ in 0..cfg.planning_steps {
                let start_state = &visited[plan_rng.random_range(0..visited.len())];
                let agent_ref = &*agent;
                let rng = &mut plan_rng;
                let rollout = model.unroll(
                    start_state,
                    |s: &[f64]| {
                        let a = agent_ref.act_with_rng(s, epsilon, rng).unwrap_or(0);
                        one_hot(a, spec.action_count)
                    },
                    cfg.unroll_length,
                );
                match rollout {
                    Ok(transitions) => {
                        if transitions.len() < cfg.unroll_length {
                            rollout_incidents += 1;
                        }
                        for t in transitions {
                            buffer.push(t);
                        }
                    }
                    Err(_) => rollout_incidents += 1,
                }
            }
        }
        // Learning: agent updates from the synthetic buffer.
        for _ in 0..cfg.learning_steps {
            if buffer.is_empty() {
                break;
            }
            let batch: Vec<(Vec<f64>, usize, f64, Vec<f64>, bool)> = buffer
                .sample(&mut plan_rng, cfg.planning_batch)
                .into_iter()
                .map(|t| {
                    let a = t.action.iter().position(|v| *v == 1.0).unwrap_or(0);
                    (t.state.clone(), a, t.reward, t.next_state.clone(), false)
                })
                .collect();
            agent.q_update_batch(&batch)?;
        }
        if !probe.is_empty()
            && (epoch % cfg.error_eval_epochs == cfg.error_eval_epochs - 1
                || epoch + 1 == cfg.epochs)
        {
            let map = evaluate_model_error(
                model,
                env,
                &probe,
                &visited,
                cfg.probe_per_dim,
                cfg.error_delta,
            )?;
            latest_error_fraction = map.flagged_fraction_visited;
        }
    }

    let final_error_map = if probe.is_empty() {
        None
    } else {
        Some(evaluate_model_error(
            model,
            env,
            &probe,
            &visited,
            cfg.probe_per_dim,
            cfg.error_delta,
        )?)
    };

    let window_start = total_steps - total_steps / 4;
    let tail: Vec<f64> = episodes
        .iter()
        .filter(|e| e.step >= window_start)
        .map(|e| e.normalized_return)
        .collect();
    let final_normalized_return = if tail.is_empty() {
        f64::NAN
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };

    Ok(DynaRunResult {
        episodes,
        timings,
        final_error_map,
        observe_calls,
        transitions_seen,
        rollout_incidents,
        final_normalized_return,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{EpsilonSchedule, QAgentConfig};
    use crate::encoding::LosseConfig;
    use crate::env::{Gridworld, GridworldConfig};
    use crate::world_model::WorldModelConfig;

    fn gridworld_setup(seed: u64) -> (Gridworld, QAgent, WorldModel) {
        let env = Gridworld::new(GridworldConfig {
            seed: derive_seed(seed, 1),
            ..GridworldConfig::default()
        });
        let agent = QAgent::new(QAgentConfig {
            encoder: LosseConfig::new(2, 8, 2, 8, derive_seed(seed, 2)),
            action_count: 4,
            gamma: 0.95,
            learning_rate: 0.2,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_steps: 500,
            },
            state_bounds: vec![(0.0, 1.0), (0.0, 1.0)],
            seed: derive_seed(seed, 3),
        })
        .unwrap();
        let model = WorldModel::new(
            LosseConfig::new(6, 10, 2, 8, derive_seed(seed, 4)),
            WorldModelConfig {
                dt: 1.0,
                epsilon: 1.0,
                state_bounds: vec![(0.0, 1.0), (0.0, 1.0)],
                action_dim: 4,
            },
        )
        .unwrap();
        (env, agent, model)
    }

    fn small_cfg(seed: u64) -> DynaConfig {
        DynaConfig {
            epochs: 20,
            interactions_per_epoch: 25,
            planning_steps: 4,
            learning_steps: 1,
            unroll_length: 3,
            model_update_interval: 25,
            real_update_interval: 4,
            planning_batch: 8,
            planning_per_real: 2,
            model_buffer_capacity: 1000,
            model_enabled: true,
            seed,
            return_norm: (0.0, 1.0),
            probe_per_dim: 8,
            error_delta: 0.05,
            error_eval_epochs: 10,
        }
    }

    #[test]
    fn identical_seeds_identical_metrics() {
        let run = |seed| {
            let (mut env, mut agent, mut model) = gridworld_setup(seed);
            run_dyna(&mut env, &mut agent, &mut model, &small_cfg(seed)).unwrap()
        };
        let a = run(3);
        let b = run(3);
        assert_eq!(a.episodes, b.episodes);
        assert_eq!(a.observe_calls, b.observe_calls);
        let c = run(4);
        assert!(a.episodes != c.episodes || a.observe_calls != c.observe_calls);
    }

    #[test]
    fn every_transition_observed_exactly_once() {
        let (mut env, mut agent, mut model) = gridworld_setup(7);
        let cfg = small_cfg(7);
        let out = run_dyna(&mut env, &mut agent, &mut model, &cfg).unwrap();
        assert_eq!(
            out.transitions_seen,
            (cfg.epochs * cfg.interactions_per_epoch) as u64
        );
        assert_eq!(out.observe_calls, out.transitions_seen);
        assert_eq!(model.observed(), out.observe_calls);
    }

    #[test]
    fn ablated_planning_equals_model_free_trajectory() {
        let seed = 11;
        let mut ablated_cfg = small_cfg(seed);
        ablated_cfg.planning_steps = 0;
        ablated_cfg.learning_steps = 0;
        ablated_cfg.planning_per_real = 0;
        ablated_cfg.probe_per_dim = 0;
        let (mut env, mut agent, mut model) = gridworld_setup(seed);
        let with_model = run_dyna(&mut env, &mut agent, &mut model, &ablated_cfg).unwrap();

        let free_cfg = small_cfg(seed).model_free_arm();
        let (mut env, mut agent, mut model) = gridworld_setup(seed);
        let model_free = run_dyna(&mut env, &mut agent, &mut model, &free_cfg).unwrap();

        // The model still learns in the ablated arm but must not influence
        // the trajectory: episode streams match step for step.
        let strip = |rows: &[EpisodeRow]| {
            rows.iter()
                .map(|r| (r.step, r.episode, r.episode_return.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&with_model.episodes), strip(&model_free.episodes));
        assert_eq!(model_free.observe_calls, 0);
        assert!(with_model.observe_calls > 0);
    }

    #[test]
    fn planning_with_empty_visited_log_is_safe() {
        let (mut env, mut agent, mut model) = gridworld_setup(13);
        let mut cfg = small_cfg(13);
        cfg.epochs = 1;
        cfg.interactions_per_epoch = 3;
        cfg.probe_per_dim = 0;
        let out = run_dyna(&mut env, &mut agent, &mut model, &cfg).unwrap();
        assert_eq!(out.transitions_seen, 3);
    }

    #[test]
    fn unroll_length_one_still_fills_buffer() {
        let (mut env, mut agent, mut model) = gridworld_setup(17);
        let mut cfg = small_cfg(17);
        cfg.unroll_length = 1;
        cfg.probe_per_dim = 0;
        let out = run_dyna(&mut env, &mut agent, &mut model, &cfg).unwrap();
        assert!(out.rollout_incidents == 0);
        assert!(out.observe_calls > 0);
    }

    #[test]
    fn buffer_evicts_fifo() {
        let mut buffer = ModelBuffer::new(3);
        for i in 0..5 {
            buffer.push(Transition::discrete(vec![i as f64], 0, 2, 0.0, vec![0.0]));
        }
        assert_eq!(buffer.len(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sample = buffer.sample(&mut rng, 10);
        assert!(sample.iter().all(|t| t.state[0] >= 2.0));
    }

    #[test]
    fn probe_grid_covers_bounds() {
        let spec = EnvSpec {
            state_dim: 2,
            action_count: 2,
            state_bounds: vec![(0.0, 1.0), (-2.0, 2.0)],
            max_episode_steps: 10,
        };
        let grid = probe_grid(&spec, 4);
        assert_eq!(grid.len(), 16);
        assert!(grid.iter().all(|s| s[0] > 0.0 && s[0] < 1.0));
        assert!(grid.iter().all(|s| s[1] > -2.0 && s[1] < 2.0));
        // First cell center of dim 0 at lo + half cell.
        assert!((grid[0][0] - 0.125).abs() < 1e-12);
        assert!((grid[0][1] + 1.5).abs() < 1e-12);
    }

    #[test]
    fn untrained_model_flags_moving_cells() {
        let (env, _, model) = gridworld_setup(19);
        let probe = probe_grid(env.spec(), 5);
        let map = evaluate_model_error(&model, &env, &probe, &[], 5, 0.05).unwrap();
        // The untrained model predicts zero delta; every cell where the true
        // step moves more than delta must be flagged.
        for cell in &map.cells {
            let (truth, _) = env.ideal_step(&cell.state, cell.action);
            let motion =
                ((truth[0] - cell.state[0]).powi(2) + (truth[1] - cell.state[1]).powi(2)).sqrt();
            assert_eq!(cell.flagged, motion > 0.05, "cell {:?}", cell.state);
        }
        // delta = 0 flags every cell with any error.
        let map0 = evaluate_model_error(&model, &env, &probe, &[], 5, 0.0).unwrap();
        for cell in &map0.cells {
            let (truth, _) = env.ideal_step(&cell.state, cell.action);
            let motion =
                ((truth[0] - cell.state[0]).powi(2) + (truth[1] - cell.state[1]).powi(2)).sqrt();
            assert_eq!(cell.flagged, motion > 0.0);
        }
        assert!(map.flagged_fraction_visited.is_nan());
    }

    #[test]
    fn trained_model_error_drops_on_visited_region() {
        // A pure-exploration policy covers states *and* actions, isolating
        // the model-accuracy mechanism from agent learning progress.
        let (mut env, mut agent, mut model) = gridworld_setup(23);
        agent = {
            let mut cfg = agent.config().clone();
            cfg.epsilon = EpsilonSchedule::constant(1.0);
            QAgent::new(cfg).unwrap()
        };
        let mut cfg = small_cfg(23);
        cfg.epochs = 160;
        let out = run_dyna(&mut env, &mut agent, &mut model, &cfg).unwrap();
        let map = out.final_error_map.expect("error map requested");
        assert!(
            map.flagged_fraction_visited < 0.2,
            "visited-region error fraction {}",
            map.flagged_fraction_visited
        );
        let mut csv = Vec::new();
        map.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("s0,s1,action,error,flagged,visited"));
        assert_eq!(text.lines().count(), map.cells.len() + 1);
    }
}
