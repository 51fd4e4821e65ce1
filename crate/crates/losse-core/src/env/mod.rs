//! Experiment environments and data generators, all deterministic under a
//! fixed seed.

mod acrobot;
mod denoise;
mod gridworld;
mod idx;
mod mountain_car;
mod prw;

pub use acrobot::{acrobot_observation, acrobot_step, Acrobot, AcrobotState};
pub use denoise::{
    dataset_from_images, load_denoise_dataset, synthetic_dataset, synthetic_images, DenoiseConfig,
    DenoiseDataset, DenoisePair,
};
pub use gridworld::{gridworld_step, Gridworld, GridworldConfig};
pub use idx::{read_idx_images, read_idx_images_file, read_idx_labels, IdxImages};
pub use mountain_car::{mountain_car_step, MountainCar};
pub use prw::{prw_target, PrwConfig, PrwStream};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Static description of a discrete-action environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_count: usize,
    /// Per-dimension `(lo, hi)` observation bounds.
    pub state_bounds: Vec<(f64, f64)>,
    pub max_episode_steps: usize,
}

/// One environment transition.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: Vec<f64>,
    pub reward: f64,
    /// Reached a terminal state (used for bootstrapping cutoffs).
    pub terminated: bool,
    /// Hit the episode step cap without terminating.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Discrete-action environment driven by the planning loop.
///
/// Instances are single-threaded; parallel replicas construct independent
/// instances with independent seeds.
pub trait Environment {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode and returns the initial observation.
    fn reset(&mut self) -> Vec<f64>;

    /// Advances one step with a discrete action index.
    fn step(&mut self, action: usize) -> Result<StepResult>;

    /// Noise-free ground-truth transition from an arbitrary state; used to
    /// score model predictions. Does not touch the environment's own state.
    fn ideal_step(&self, state: &[f64], action: usize) -> (Vec<f64>, f64);
}
