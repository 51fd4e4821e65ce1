//! Classic underpowered-car-on-a-hill task with the standard discrete
//! formulation: position in `[-1.2, 0.6]`, velocity in `[-0.07, 0.07]`,
//! actions {reverse, coast, forward}, reward -1 per step until the car
//! reaches the right hilltop at position 0.5.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LosseError, Result};

use super::{EnvSpec, Environment, StepResult};

pub const MC_POSITION_RANGE: (f64, f64) = (-1.2, 0.6);
pub const MC_VELOCITY_RANGE: (f64, f64) = (-0.07, 0.07);
pub const MC_GOAL_POSITION: f64 = 0.5;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// One canonical update. Action 0 pushes backward, 1 coasts, 2 forward.
/// Returns `((position, velocity), reward, done)`.
pub fn mountain_car_step(state: (f64, f64), action: usize) -> Result<((f64, f64), f64, bool)> {
    if action > 2 {
        return Err(LosseError::Value(format!(
            "action index {action} out of range (3 actions)"
        )));
    }
    let (pos, vel) = state;
    let push = action as f64 - 1.0;
    let mut new_vel = vel + push * FORCE - GRAVITY * (3.0 * pos).cos();
    new_vel = new_vel.clamp(MC_VELOCITY_RANGE.0, MC_VELOCITY_RANGE.1);
    let mut new_pos = pos + new_vel;
    new_pos = new_pos.clamp(MC_POSITION_RANGE.0, MC_POSITION_RANGE.1);
    // Inelastic collision with the left wall.
    if new_pos <= MC_POSITION_RANGE.0 && new_vel < 0.0 {
        new_vel = 0.0;
    }
    let done = new_pos >= MC_GOAL_POSITION;
    Ok(((new_pos, new_vel), -1.0, done))
}

#[derive(Debug, Clone)]
pub struct MountainCar {
    spec: EnvSpec,
    state: (f64, f64),
    steps: usize,
    rng: ChaCha8Rng,
}

impl MountainCar {
    pub fn new(seed: u64, max_episode_steps: usize) -> Self {
        let spec = EnvSpec {
            state_dim: 2,
            action_count: 3,
            state_bounds: vec![MC_POSITION_RANGE, MC_VELOCITY_RANGE],
            max_episode_steps,
        };
        MountainCar {
            spec,
            state: (-0.5, 0.0),
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Environment for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = (self.rng.random_range(-0.6..-0.4), 0.0);
        self.steps = 0;
        vec![self.state.0, self.state.1]
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        let (next, reward, terminated) = mountain_car_step(self.state, action)?;
        self.state = next;
        self.steps += 1;
        Ok(StepResult {
            state: vec![next.0, next.1],
            reward,
            terminated,
            truncated: !terminated && self.steps >= self.spec.max_episode_steps,
        })
    }

    fn ideal_step(&self, state: &[f64], action: usize) -> (Vec<f64>, f64) {
        match mountain_car_step((state[0], state[1]), action) {
            Ok((next, reward, _)) => (vec![next.0, next.1], reward),
            Err(_) => (state.to_vec(), 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coasting_at_rest_rolls_downhill() {
        // Hand-computed: vel' = -0.0025 * cos(3 * -0.5) = -0.0025 * cos(-1.5),
        // pos' = -0.5 + vel'.
        let ((pos, vel), r, done) = mountain_car_step((-0.5, 0.0), 1).unwrap();
        let expect_vel = -0.0025 * (-1.5f64).cos();
        assert!((vel - expect_vel).abs() < 1e-15);
        assert!((pos - (-0.5 + expect_vel)).abs() < 1e-15);
        assert!(pos < -0.5, "gravity should pull the car left");
        assert_eq!(r, -1.0);
        assert!(!done);
    }

    #[test]
    fn reaching_goal_terminates() {
        let ((pos, _), _, done) = mountain_car_step((0.499, 0.07), 2).unwrap();
        assert!(pos >= MC_GOAL_POSITION);
        assert!(done);
    }

    #[test]
    fn velocity_and_position_stay_bounded() {
        let mut state = (-0.5, 0.0);
        for i in 0..2000 {
            let (next, _, done) = mountain_car_step(state, i % 3).unwrap();
            assert!(next.0 >= MC_POSITION_RANGE.0 && next.0 <= MC_POSITION_RANGE.1);
            assert!(next.1 >= MC_VELOCITY_RANGE.0 && next.1 <= MC_VELOCITY_RANGE.1);
            state = if done { (-0.5, 0.0) } else { next };
        }
    }

    #[test]
    fn invalid_action_rejected() {
        assert!(mountain_car_step((-0.5, 0.0), 3).is_err());
    }

    #[test]
    fn full_throttle_oscillation_escapes_eventually() {
        // Energy pumping: push in the direction of motion.
        let mut state = (-0.5, 0.0);
        let mut done = false;
        for _ in 0..400 {
            let action = if state.1 >= 0.0 { 2 } else { 0 };
            let (next, _, d) = mountain_car_step(state, action).unwrap();
            state = next;
            if d {
                done = true;
                break;
            }
        }
        assert!(
            done,
            "energy pumping should reach the goal, ended at {state:?}"
        );
    }
}
