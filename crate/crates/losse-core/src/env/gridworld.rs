//! Continuous-state gridworld navigation with a vertical barrier.
//!
//! The agent starts near the bottom-left corner and must reach the goal
//! region at the top-right. Each step moves a fixed distance in one of four
//! directions plus a small uniform offset that makes the state space
//! continuous. A vertical wall at `x = barrier_x` spanning `y` in
//! `[0, barrier_top]` blocks movement except through the gap above it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LosseError, Result};

use super::{EnvSpec, Environment, StepResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridworldConfig {
    pub step_size: f64,
    /// Half-width of the uniform per-coordinate offset.
    pub noise: f64,
    pub start: (f64, f64),
    pub goal: (f64, f64),
    pub goal_radius: f64,
    pub barrier_x: f64,
    pub barrier_top: f64,
    pub max_episode_steps: usize,
    pub seed: u64,
}

impl Default for GridworldConfig {
    fn default() -> Self {
        GridworldConfig {
            step_size: 0.05,
            noise: 0.01,
            start: (0.1, 0.1),
            goal: (0.9, 0.9),
            goal_radius: 0.05,
            barrier_x: 0.5,
            barrier_top: 0.7,
            max_episode_steps: 500,
            seed: 0,
        }
    }
}

const DIRECTIONS: [(f64, f64); 4] = [(0.0, 1.0), (0.0, -1.0), (1.0, 0.0), (-1.0, 0.0)];

/// Moves from `state` along `action` (0 up, 1 down, 2 right, 3 left) with
/// the given per-coordinate offsets, truncating at the barrier surface and
/// clamping to the unit square. Returns `(next, reward, reached_goal)`.
pub fn gridworld_step(
    cfg: &GridworldConfig,
    state: (f64, f64),
    action: usize,
    offset: (f64, f64),
) -> Result<((f64, f64), f64, bool)> {
    if !(0.0..=1.0).contains(&state.0) || !(0.0..=1.0).contains(&state.1) {
        return Err(LosseError::Value(format!(
            "state ({}, {}) outside the unit square",
            state.0, state.1
        )));
    }
    let (dx, dy) = DIRECTIONS.get(action).copied().ok_or_else(|| {
        LosseError::Value(format!("action index {action} out of range (4 actions)"))
    })?;
    let mut nx = state.0 + dx * cfg.step_size + offset.0;
    let mut ny = state.1 + dy * cfg.step_size + offset.1;
    nx = nx.clamp(0.0, 1.0);
    ny = ny.clamp(0.0, 1.0);
    // Barrier crossing: stop at the wall surface. The path is the segment
    // from state to (nx, ny); if it reaches x = barrier_x below the gap, the
    // move ends at the crossing point, nudged a hair back toward the
    // approach side so the side of the wall stays well defined.
    let before = state.0 - cfg.barrier_x;
    let after = nx - cfg.barrier_x;
    if before != 0.0 && (after == 0.0 || after.signum() != before.signum()) {
        let t = (cfg.barrier_x - state.0) / (nx - state.0);
        let y_at_wall = state.1 + t * (ny - state.1);
        if y_at_wall <= cfg.barrier_top {
            nx = cfg.barrier_x + before.signum() * 1e-9;
            ny = y_at_wall.clamp(0.0, 1.0);
        }
    }
    let dist2 = (nx - cfg.goal.0).powi(2) + (ny - cfg.goal.1).powi(2);
    let reached = dist2 < cfg.goal_radius * cfg.goal_radius;
    let reward = if reached { 1.0 } else { 0.0 };
    Ok(((nx, ny), reward, reached))
}

#[derive(Debug, Clone)]
pub struct Gridworld {
    cfg: GridworldConfig,
    spec: EnvSpec,
    state: (f64, f64),
    steps: usize,
    rng: ChaCha8Rng,
}

impl Gridworld {
    pub fn new(cfg: GridworldConfig) -> Self {
        let spec = EnvSpec {
            state_dim: 2,
            action_count: 4,
            state_bounds: vec![(0.0, 1.0), (0.0, 1.0)],
            max_episode_steps: cfg.max_episode_steps,
        };
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let state = cfg.start;
        Gridworld {
            cfg,
            spec,
            state,
            steps: 0,
            rng,
        }
    }

    pub fn config(&self) -> &GridworldConfig {
        &self.cfg
    }

    fn draw_offset(&mut self) -> (f64, f64) {
        let n = self.cfg.noise;
        (self.rng.random_range(-n..=n), self.rng.random_range(-n..=n))
    }
}

impl Environment for Gridworld {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = self.cfg.start;
        self.steps = 0;
        vec![self.state.0, self.state.1]
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        let offset = self.draw_offset();
        let (next, reward, reached) = gridworld_step(&self.cfg, self.state, action, offset)?;
        self.state = next;
        self.steps += 1;
        let truncated = !reached && self.steps >= self.cfg.max_episode_steps;
        Ok(StepResult {
            state: vec![next.0, next.1],
            reward,
            terminated: reached,
            truncated,
        })
    }

    fn ideal_step(&self, state: &[f64], action: usize) -> (Vec<f64>, f64) {
        let (next, reward, _) = gridworld_step(&self.cfg, (state[0], state[1]), action, (0.0, 0.0))
            .unwrap_or(((state[0], state[1]), 0.0, false));
        (vec![next.0, next.1], reward)
    }
}
