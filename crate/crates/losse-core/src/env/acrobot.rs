//! Two-link underactuated pendulum (acrobot) with the canonical physical
//! constants: unit masses and lengths, torque on the second joint only,
//! reward -1 per step until the tip swings above one link length.
//!
//! The internal state is `(theta1, theta2, omega1, omega2)`; observations
//! use the trigonometric embedding `(cos t1, sin t1, cos t2, sin t2, w1, w2)`
//! so that learned dynamics never face an angle-wrapping discontinuity.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LosseError, Result};

use super::{EnvSpec, Environment, StepResult};

const LINK_MASS: f64 = 1.0;
const LINK_LENGTH: f64 = 1.0;
const LINK_COM: f64 = 0.5;
const LINK_INERTIA: f64 = 1.0;
const GRAVITY: f64 = 9.8;
pub const ACRO_MAX_VEL1: f64 = 4.0 * PI;
pub const ACRO_MAX_VEL2: f64 = 9.0 * PI;

pub type AcrobotState = [f64; 4];

fn wrap_angle(a: f64) -> f64 {
    let mut a = (a + PI) % (2.0 * PI);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    a - PI
}

/// Angular accelerations for the standard two-link dynamics.
fn accelerations(s: &AcrobotState, torque: f64) -> (f64, f64) {
    let (t1, t2, w1, w2) = (s[0], s[1], s[2], s[3]);
    let m = LINK_MASS;
    let l1 = LINK_LENGTH;
    let lc = LINK_COM;
    let i = LINK_INERTIA;
    let g = GRAVITY;
    let d1 = m * lc * lc + m * (l1 * l1 + lc * lc + 2.0 * l1 * lc * t2.cos()) + 2.0 * i;
    let d2 = m * (lc * lc + l1 * lc * t2.cos()) + i;
    let phi2 = m * lc * g * (t1 + t2 - PI / 2.0).cos();
    let phi1 = -m * l1 * lc * w2 * w2 * t2.sin() - 2.0 * m * l1 * lc * w2 * w1 * t2.sin()
        + (m * lc + m * l1) * g * (t1 - PI / 2.0).cos()
        + phi2;
    let a2 = (torque + d2 / d1 * phi1 - m * l1 * lc * w1 * w1 * t2.sin() - phi2)
        / (m * lc * lc + i - d2 * d2 / d1);
    let a1 = -(d2 * a2 + phi1) / d1;
    (a1, a2)
}

/// One Euler step of length `dt` on the canonical state. Action 0 applies
/// torque -1, action 1 no torque, action 2 torque +1.
/// Returns `(next_state, reward, done)`.
pub fn acrobot_step(
    state: AcrobotState,
    action: usize,
    dt: f64,
) -> Result<(AcrobotState, f64, bool)> {
    if action > 2 {
        return Err(LosseError::Value(format!(
            "action index {action} out of range (3 actions)"
        )));
    }
    let torque = action as f64 - 1.0;
    let substeps = 4;
    let h = dt / substeps as f64;
    let mut s = state;
    for _ in 0..substeps {
        let (a1, a2) = accelerations(&s, torque);
        s[0] += s[2] * h;
        s[1] += s[3] * h;
        s[2] += a1 * h;
        s[3] += a2 * h;
        s[2] = s[2].clamp(-ACRO_MAX_VEL1, ACRO_MAX_VEL1);
        s[3] = s[3].clamp(-ACRO_MAX_VEL2, ACRO_MAX_VEL2);
    }
    s[0] = wrap_angle(s[0]);
    s[1] = wrap_angle(s[1]);
    let done = -s[0].cos() - (s[0] + s[1]).cos() > 1.0;
    Ok((s, -1.0, done))
}

/// Trigonometric observation of a canonical state.
pub fn acrobot_observation(s: &AcrobotState) -> Vec<f64> {
    vec![s[0].cos(), s[0].sin(), s[1].cos(), s[1].sin(), s[2], s[3]]
}

/// Recovers a canonical state from a trigonometric observation.
fn state_from_observation(obs: &[f64]) -> AcrobotState {
    [
        obs[1].atan2(obs[0]),
        obs[3].atan2(obs[2]),
        obs[4].clamp(-ACRO_MAX_VEL1, ACRO_MAX_VEL1),
        obs[5].clamp(-ACRO_MAX_VEL2, ACRO_MAX_VEL2),
    ]
}

#[derive(Debug, Clone)]
pub struct Acrobot {
    spec: EnvSpec,
    state: AcrobotState,
    dt: f64,
    steps: usize,
    rng: ChaCha8Rng,
}

impl Acrobot {
    pub fn new(seed: u64, max_episode_steps: usize) -> Self {
        let spec = EnvSpec {
            state_dim: 6,
            action_count: 3,
            state_bounds: vec![
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-ACRO_MAX_VEL1, ACRO_MAX_VEL1),
                (-ACRO_MAX_VEL2, ACRO_MAX_VEL2),
            ],
            max_episode_steps,
        };
        Acrobot {
            spec,
            state: [0.0; 4],
            dt: 0.2,
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn canonical_state(&self) -> AcrobotState {
        self.state
    }
}

impl Environment for Acrobot {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Vec<f64> {
        for v in self.state.iter_mut() {
            *v = self.rng.random_range(-0.1..0.1);
        }
        self.steps = 0;
        acrobot_observation(&self.state)
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        let (next, reward, terminated) = acrobot_step(self.state, action, self.dt)?;
        self.state = next;
        self.steps += 1;
        Ok(StepResult {
            state: acrobot_observation(&next),
            reward,
            terminated,
            truncated: !terminated && self.steps >= self.spec.max_episode_steps,
        })
    }

    fn ideal_step(&self, state: &[f64], action: usize) -> (Vec<f64>, f64) {
        let canonical = state_from_observation(state);
        match acrobot_step(canonical, action, self.dt) {
            Ok((next, reward, _)) => (acrobot_observation(&next), reward),
            Err(_) => (state.to_vec(), 0.0),
        }
    }
}
