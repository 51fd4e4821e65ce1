//! World model: delta-state dynamics and reward heads over one shared
//! sparse encoding of `[state, action]`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::encoding::{ensure_finite, LosseConfig, LosseEncoder, SparseVector};
use crate::error::{LosseError, Result};
use crate::learner::{FtlLearner, ObserveOutcome};

/// One step of environment experience. Discrete actions are stored one-hot
/// so the model input is always the concatenation `[s, a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

impl Transition {
    pub fn new(state: Vec<f64>, action: Vec<f64>, reward: f64, next_state: Vec<f64>) -> Self {
        Transition {
            state,
            action,
            reward,
            next_state,
        }
    }

    /// Builds a transition with a one-hot encoded discrete action.
    pub fn discrete(
        state: Vec<f64>,
        action_index: usize,
        action_count: usize,
        reward: f64,
        next_state: Vec<f64>,
    ) -> Self {
        let mut action = vec![0.0; action_count];
        action[action_index] = 1.0;
        Transition::new(state, action, reward, next_state)
    }

    fn validate(&self, state_dim: usize, action_dim: usize) -> Result<()> {
        if self.state.len() != state_dim
            || self.next_state.len() != state_dim
            || self.action.len() != action_dim
        {
            return Err(LosseError::shape(
                format!("state dim {state_dim}, action dim {action_dim}"),
                format!(
                    "state {}, next {}, action {}",
                    self.state.len(),
                    self.next_state.len(),
                    self.action.len()
                ),
            ));
        }
        ensure_finite(&self.state, "transition state")?;
        ensure_finite(&self.action, "transition action")?;
        ensure_finite(&self.next_state, "transition next state")?;
        if !self.reward.is_finite() {
            return Err(LosseError::Value(format!(
                "transition reward {} is not finite",
                self.reward
            )));
        }
        Ok(())
    }
}

/// Model configuration beyond the encoder geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModelConfig {
    /// Integration step: predictions are `s + dt * predicted_delta`.
    pub dt: f64,
    /// Ridge term for both learners' block solves.
    pub epsilon: f64,
    /// Per-dimension state bounds; predictions clamp into these, and inputs
    /// normalize from them onto the encoder's input bound.
    pub state_bounds: Vec<(f64, f64)>,
    pub action_dim: usize,
}

impl WorldModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(LosseError::Config("dt must be positive".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(LosseError::Config("epsilon must be nonnegative".into()));
        }
        if self.action_dim == 0 {
            return Err(LosseError::Config("action_dim must be positive".into()));
        }
        for &(lo, hi) in &self.state_bounds {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(LosseError::Config(format!(
                    "state bounds must be finite with lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Maps raw state dims from their bounds onto `[-bound, bound]`, and scales
/// one-hot action entries up to `bound` so both signals have comparable
/// magnitude after projection.
fn normalize_input(state: &[f64], action: &[f64], bounds: &[(f64, f64)], bound: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(state.len() + action.len());
    for (v, &(lo, hi)) in state.iter().zip(bounds) {
        out.push((2.0 * (v - lo) / (hi - lo) - 1.0) * bound);
    }
    for a in action {
        out.push(a * bound);
    }
    out
}

/// Learned dynamics and reward model.
///
/// Both heads observe the same encoding of `[s, a]`: the dynamics head
/// regresses the scaled state difference `(s' - s) / dt`, the reward head
/// regresses the scalar reward. Predictions integrate the delta and clamp
/// into the configured state bounds. A single writer updates the model;
/// frozen clones may serve concurrent rollouts.
#[derive(Debug, Clone)]
pub struct WorldModel {
    encoder: LosseEncoder,
    dynamics: FtlLearner,
    reward: FtlLearner,
    config: WorldModelConfig,
    observed: u64,
}

impl WorldModel {
    pub fn new(encoder_config: LosseConfig, config: WorldModelConfig) -> Result<Self> {
        config.validate()?;
        let state_dim = config.state_bounds.len();
        if encoder_config.input_dim != state_dim + config.action_dim {
            return Err(LosseError::Config(format!(
                "encoder input_dim {} must equal state_dim {} + action_dim {}",
                encoder_config.input_dim, state_dim, config.action_dim
            )));
        }
        let encoder = LosseEncoder::new(encoder_config)?;
        let feature_dim = encoder.output_dim();
        let dynamics = FtlLearner::new(feature_dim, state_dim, config.epsilon)?;
        let reward = FtlLearner::new(feature_dim, 1, config.epsilon)?;
        Ok(WorldModel {
            encoder,
            dynamics,
            reward,
            config,
            observed: 0,
        })
    }

    pub fn encoder(&self) -> &LosseEncoder {
        &self.encoder
    }

    pub fn dynamics(&self) -> &FtlLearner {
        &self.dynamics
    }

    pub fn reward(&self) -> &FtlLearner {
        &self.reward
    }

    pub fn config(&self) -> &WorldModelConfig {
        &self.config
    }

    /// Number of transitions absorbed.
    pub fn observed(&self) -> u64 {
        self.observed
    }

    pub fn state_dim(&self) -> usize {
        self.config.state_bounds.len()
    }

    /// Encodes `[s, a]` after normalization and clamping.
    pub fn encode_input(&self, state: &[f64], action: &[f64]) -> Result<SparseVector> {
        let x = normalize_input(
            state,
            action,
            &self.config.state_bounds,
            self.encoder.config().input_bound,
        );
        self.encoder.encode(&x)
    }

    /// Absorbs one transition: a single encode feeds both heads.
    pub fn observe(&mut self, tr: &Transition) -> Result<()> {
        tr.validate(self.state_dim(), self.config.action_dim)?;
        let phi = self.encode_input(&tr.state, &tr.action)?;
        let delta: Vec<f64> = tr
            .next_state
            .iter()
            .zip(&tr.state)
            .map(|(n, s)| (n - s) / self.config.dt)
            .collect();
        match self.dynamics.observe_sparse(&phi, &delta)? {
            ObserveOutcome::Updated => {}
            ObserveOutcome::SkippedEmptySupport => return Ok(()),
        }
        self.reward.observe_sparse(&phi, &[tr.reward])?;
        self.observed += 1;
        Ok(())
    }

    /// Predicts `(next_state, reward)`; the next state is the integrated
    /// delta clamped into the state bounds.
    pub fn predict_next(&self, state: &[f64], action: &[f64]) -> Result<(Vec<f64>, f64)> {
        if state.len() != self.state_dim() || action.len() != self.config.action_dim {
            return Err(LosseError::shape(
                format!(
                    "state dim {}, action dim {}",
                    self.state_dim(),
                    self.config.action_dim
                ),
                format!("state {}, action {}", state.len(), action.len()),
            ));
        }
        let phi = self.encode_input(state, action)?;
        let delta = self.dynamics.predict_sparse(&phi)?;
        let reward = self.reward.predict_sparse(&phi)?[0];
        let next: Vec<f64> = state
            .iter()
            .zip(&delta)
            .zip(&self.config.state_bounds)
            .map(|((s, d), &(lo, hi))| (s + self.config.dt * d).clamp(lo, hi))
            .collect();
        Ok((next, reward))
    }

    /// Rolls the model forward `k` steps under `policy`, returning the
    /// synthetic transitions. A non-finite model state truncates the
    /// rollout and returns the prefix.
    pub fn unroll<P>(&self, start: &[f64], mut policy: P, k: usize) -> Result<Vec<Transition>>
    where
        P: FnMut(&[f64]) -> Vec<f64>,
    {
        if k == 0 {
            return Err(LosseError::Config(
                "unroll length must be at least 1".into(),
            ));
        }
        ensure_finite(start, "rollout start state")?;
        let mut out = Vec::with_capacity(k);
        let mut state = start.to_vec();
        for _ in 0..k {
            let action = policy(&state);
            let (next, reward) = self.predict_next(&state, &action)?;
            if next.iter().any(|v| !v.is_finite()) || !reward.is_finite() {
                break;
            }
            out.push(Transition::new(state.clone(), action, reward, next.clone()));
            state = next;
        }
        Ok(out)
    }

    /// Writes the full model checkpoint: encoder config plus both learners.
    pub fn write_checkpoint<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"LWMC")?;
        w.write_all(&1u32.to_le_bytes())?;
        let cfg = self.encoder.config();
        w.write_all(&(cfg.input_dim as u64).to_le_bytes())?;
        w.write_all(&(cfg.kappa as u64).to_le_bytes())?;
        w.write_all(&(cfg.rho as u64).to_le_bytes())?;
        w.write_all(&(cfg.lambda as u64).to_le_bytes())?;
        w.write_all(&cfg.input_bound.to_bits().to_le_bytes())?;
        w.write_all(&cfg.bin_range.0.to_bits().to_le_bytes())?;
        w.write_all(&cfg.bin_range.1.to_bits().to_le_bytes())?;
        w.write_all(&[match cfg.bin_mode {
            crate::encoding::BinMode::Interpolation => 0u8,
            crate::encoding::BinMode::Distance => 1u8,
        }])?;
        w.write_all(&cfg.seed.to_le_bytes())?;
        w.write_all(&self.config.dt.to_bits().to_le_bytes())?;
        w.write_all(&self.config.epsilon.to_bits().to_le_bytes())?;
        w.write_all(&(self.config.action_dim as u64).to_le_bytes())?;
        w.write_all(&(self.config.state_bounds.len() as u64).to_le_bytes())?;
        for &(lo, hi) in &self.config.state_bounds {
            w.write_all(&lo.to_bits().to_le_bytes())?;
            w.write_all(&hi.to_bits().to_le_bytes())?;
        }
        w.write_all(&self.observed.to_le_bytes())?;
        self.dynamics.write_snapshot(w)?;
        self.reward.write_snapshot(w)?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"LWMC" {
            return Err(LosseError::Parse {
                offset: 0,
                message: format!("bad checkpoint magic {magic:02x?}"),
            });
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != 1 {
            return Err(LosseError::Parse {
                offset: 4,
                message: format!("unsupported checkpoint version {version}"),
            });
        }
        let mut u64buf = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let input_dim = next_u64(r)? as usize;
        let kappa = next_u64(r)? as usize;
        let rho = next_u64(r)? as usize;
        let lambda = next_u64(r)? as usize;
        let input_bound = f64::from_bits(next_u64(r)?);
        let lo = f64::from_bits(next_u64(r)?);
        let hi = f64::from_bits(next_u64(r)?);
        let mut mode = [0u8; 1];
        r.read_exact(&mut mode)?;
        let bin_mode = match mode[0] {
            0 => crate::encoding::BinMode::Interpolation,
            _ => crate::encoding::BinMode::Distance,
        };
        let seed = next_u64(r)?;
        let dt = f64::from_bits(next_u64(r)?);
        let epsilon = f64::from_bits(next_u64(r)?);
        let action_dim = next_u64(r)? as usize;
        let n_bounds = next_u64(r)? as usize;
        let mut state_bounds = Vec::with_capacity(n_bounds);
        for _ in 0..n_bounds {
            let lo = f64::from_bits(next_u64(r)?);
            let hi = f64::from_bits(next_u64(r)?);
            state_bounds.push((lo, hi));
        }
        let observed = next_u64(r)?;
        let mut enc_cfg = LosseConfig::new(input_dim, kappa, rho, lambda, seed);
        enc_cfg.input_bound = input_bound;
        enc_cfg.bin_range = (lo, hi);
        enc_cfg.bin_mode = bin_mode;
        let encoder = LosseEncoder::new(enc_cfg)?;
        let dynamics = FtlLearner::read_snapshot(r)?;
        let reward = FtlLearner::read_snapshot(r)?;
        Ok(WorldModel {
            encoder,
            dynamics,
            reward,
            config: WorldModelConfig {
                dt,
                epsilon,
                state_bounds,
                action_dim,
            },
            observed,
        })
    }
}
