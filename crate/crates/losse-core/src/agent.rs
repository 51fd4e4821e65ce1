//! Linear Q-learning base agent with epsilon-greedy exploration over a
//! fixed sparse encoding of states.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{ensure_finite, LosseConfig, LosseEncoder, SparseVector};
use crate::error::{LosseError, Result};

/// Linear decay from `start` to `end` over `decay_steps` interactions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn constant(value: f64) -> Self {
        EpsilonSchedule {
            start: value,
            end: value,
            decay_steps: 1,
        }
    }

    pub fn value(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }

    fn validate(&self) -> Result<()> {
        for v in [self.start, self.end] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LosseError::Config(format!(
                    "epsilon values must lie in [0, 1], got {v}"
                )));
            }
        }
        if self.decay_steps == 0 {
            return Err(LosseError::Config("decay_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAgentConfig {
    pub encoder: LosseConfig,
    pub action_count: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epsilon: EpsilonSchedule,
    /// Per-dimension state bounds used to normalize states onto the
    /// encoder's input bound before encoding.
    pub state_bounds: Vec<(f64, f64)>,
    pub seed: u64,
}

impl QAgentConfig {
    fn validate(&self) -> Result<()> {
        if self.action_count == 0 {
            return Err(LosseError::Config("action_count must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(LosseError::Config(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(LosseError::Config(
                "learning_rate must be nonnegative".into(),
            ));
        }
        if self.encoder.input_dim != self.state_bounds.len() {
            return Err(LosseError::Config(format!(
                "encoder input_dim {} must match state dimension {}",
                self.encoder.input_dim,
                self.state_bounds.len()
            )));
        }
        self.epsilon.validate()
    }
}

/// Q-learning agent: `Q(s, a) = phi(s)^T weights[:, a]`.
///
/// State features are normalized to unit L1 mass (each grid contributes
/// `1/kappa`), so `Q` reads as an average of cell weights and step sizes
/// behave like tabular ones. Updates touch only the rows in the feature
/// support. Single writer; parallel seeds use independent agents.
#[derive(Debug, Clone)]
pub struct QAgent {
    config: QAgentConfig,
    encoder: LosseEncoder,
    weights: Array2<f64>,
    interactions: u64,
    rng: ChaCha8Rng,
}

impl QAgent {
    pub fn new(config: QAgentConfig) -> Result<Self> {
        config.validate()?;
        let encoder = LosseEncoder::new(config.encoder.clone())?;
        let weights = Array2::zeros((encoder.output_dim(), config.action_count));
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(QAgent {
            config,
            encoder,
            weights,
            interactions: 0,
            rng,
        })
    }

    pub fn config(&self) -> &QAgentConfig {
        &self.config
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn action_count(&self) -> usize {
        self.config.action_count
    }

    /// Current exploration rate under the schedule.
    pub fn epsilon(&self) -> f64 {
        self.config.epsilon.value(self.interactions)
    }

    /// Advances the epsilon schedule by one real environment interaction.
    pub fn note_interaction(&mut self) {
        self.interactions += 1;
    }

    /// Encodes a state: normalize from bounds onto the encoder input bound,
    /// encode, scale to unit L1 mass.
    pub fn encode_state(&self, state: &[f64]) -> Result<SparseVector> {
        if state.len() != self.config.state_bounds.len() {
            return Err(LosseError::shape(
                format!("state of length {}", self.config.state_bounds.len()),
                format!("length {}", state.len()),
            ));
        }
        ensure_finite(state, "state")?;
        let bound = self.encoder.config().input_bound;
        let x: Vec<f64> = state
            .iter()
            .zip(&self.config.state_bounds)
            .map(|(v, &(lo, hi))| (2.0 * (v - lo) / (hi - lo) - 1.0) * bound)
            .collect();
        let phi = self.encoder.encode(&x)?;
        Ok(phi.scaled(1.0 / self.config.encoder.kappa as f64))
    }

    /// Action values for pre-encoded features.
    pub fn q_values_features(&self, phi: &SparseVector) -> Vec<f64> {
        let mut q = vec![0.0; self.config.action_count];
        for (j, v) in phi.iter() {
            let row = self.weights.row(j);
            for (acc, w) in q.iter_mut().zip(row) {
                *acc += v * w;
            }
        }
        q
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(self.q_values_features(&self.encode_state(state)?))
    }

    /// Greedy argmax with deterministic lowest-index tie-break.
    pub fn greedy_from_values(q: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in q.iter().enumerate().skip(1) {
            if *v > q[best] {
                best = i;
            }
        }
        best
    }

    pub fn greedy_action(&self, state: &[f64]) -> Result<usize> {
        Ok(Self::greedy_from_values(&self.q_values(state)?))
    }

    /// Epsilon-greedy action using the agent's own RNG stream.
    pub fn act(&mut self, state: &[f64], greedy: bool) -> Result<usize> {
        if greedy {
            return self.greedy_action(state);
        }
        let eps = self.epsilon();
        let q = self.q_values(state)?;
        let roll: f64 = self.rng.random();
        if roll < eps {
            Ok(self.rng.random_range(0..self.config.action_count))
        } else {
            Ok(Self::greedy_from_values(&q))
        }
    }

    /// Epsilon-greedy action using an external RNG; used by planning so
    /// rollouts never disturb the agent's own stream.
    pub fn act_with_rng(&self, state: &[f64], epsilon: f64, rng: &mut ChaCha8Rng) -> Result<usize> {
        let q = self.q_values(state)?;
        let roll: f64 = rng.random();
        if roll < epsilon {
            Ok(rng.random_range(0..self.config.action_count))
        } else {
            Ok(Self::greedy_from_values(&q))
        }
    }

    /// One semi-gradient TD update on pre-encoded features.
    pub fn q_update_features(
        &mut self,
        phi: &SparseVector,
        action: usize,
        reward: f64,
        next_phi: Option<&SparseVector>,
        scale: f64,
    ) -> Result<()> {
        if action >= self.config.action_count {
            return Err(LosseError::Value(format!(
                "action index {action} out of range"
            )));
        }
        let target = match next_phi {
            Some(next) => {
                let next_q = self.q_values_features(next);
                reward + self.config.gamma * next_q[Self::greedy_from_values(&next_q)]
            }
            None => reward,
        };
        if !target.is_finite() {
            return Err(LosseError::Value(format!("non-finite TD target {target}")));
        }
        let q_sa = self.q_values_features(phi)[action];
        let delta = target - q_sa;
        let step = self.config.learning_rate * delta * scale;
        for (j, v) in phi.iter() {
            self.weights[[j, action]] += step * v;
        }
        Ok(())
    }

    /// Q-learning update from a raw transition. `terminated` controls the
    /// bootstrap cutoff; truncation at an episode cap must pass `false`.
    pub fn q_update(
        &mut self,
        state: &[f64],
        action: usize,
        reward: f64,
        next_state: &[f64],
        terminated: bool,
    ) -> Result<()> {
        if !reward.is_finite() {
            return Err(LosseError::Value(format!("non-finite reward {reward}")));
        }
        let phi = self.encode_state(state)?;
        let next = if terminated {
            None
        } else {
            Some(self.encode_state(next_state)?)
        };
        self.q_update_features(&phi, action, reward, next.as_ref(), 1.0)
    }

    /// One averaged update over a batch of transitions: TD errors are all
    /// computed at the current weights, then applied together.
    pub fn q_update_batch(
        &mut self,
        batch: &[(Vec<f64>, usize, f64, Vec<f64>, bool)],
    ) -> Result<()> {
        if batch.is_empty() {
            return Ok(());
        }
        let scale = 1.0 / batch.len() as f64;
        let mut updates = Vec::with_capacity(batch.len());
        for (state, action, reward, next_state, terminated) in batch {
            let phi = self.encode_state(state)?;
            let target = if *terminated {
                *reward
            } else {
                let next_q = self.q_values(next_state)?;
                *reward + self.config.gamma * next_q[Self::greedy_from_values(&next_q)]
            };
            if !target.is_finite() {
                return Err(LosseError::Value(format!("non-finite TD target {target}")));
            }
            let delta = target - self.q_values_features(&phi)[*action];
            updates.push((phi, *action, delta));
        }
        for (phi, action, delta) in updates {
            let step = self.config.learning_rate * delta * scale;
            for (j, v) in phi.iter() {
                self.weights[[j, action]] += step * v;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_agent(alpha: f64, gamma: f64) -> QAgent {
        // kappa=1, rho=1, lambda=2 gives exactly 2 feature slots, which the
        // feature-level tests drive with hand-built one-hot vectors.
        let cfg = QAgentConfig {
            encoder: LosseConfig::new(1, 1, 1, 2, 0),
            action_count: 2,
            gamma,
            learning_rate: alpha,
            epsilon: EpsilonSchedule::constant(0.0),
            state_bounds: vec![(-1.0, 1.0)],
            seed: 5,
        };
        QAgent::new(cfg).unwrap()
    }

    fn one_hot(dim: usize, k: usize) -> SparseVector {
        SparseVector::new(dim, vec![k], vec![1.0]).unwrap()
    }

    #[test]
    fn greedy_tie_breaks_to_lowest_index() {
        assert_eq!(QAgent::greedy_from_values(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(QAgent::greedy_from_values(&[0.0, 1.0, 1.0]), 1);
        let agent = tiny_agent(0.1, 0.9);
        assert_eq!(agent.greedy_action(&[0.2]).unwrap(), 0);
    }

    #[test]
    fn epsilon_one_explores_uniformly_epsilon_zero_is_greedy() {
        let mut cfg = tiny_agent(0.1, 0.9).config.clone();
        cfg.epsilon = EpsilonSchedule::constant(1.0);
        let mut agent = QAgent::new(cfg).unwrap();
        let mut counts = [0usize; 2];
        for _ in 0..2000 {
            counts[agent.act(&[0.0], false).unwrap()] += 1;
        }
        assert!(counts[0] > 800 && counts[1] > 800, "{counts:?}");

        let mut greedy_cfg = agent.config.clone();
        greedy_cfg.epsilon = EpsilonSchedule::constant(0.0);
        let mut agent = QAgent::new(greedy_cfg).unwrap();
        agent.weights[[0, 1]] = 1.0;
        agent.weights[[1, 1]] = 1.0;
        for _ in 0..50 {
            assert_eq!(agent.act(&[0.0], false).unwrap(), 1);
            assert_eq!(agent.act(&[0.0], true).unwrap(), 1);
        }
    }

    #[test]
    fn epsilon_schedule_decays_linearly() {
        let sched = EpsilonSchedule {
            start: 1.0,
            end: 0.0,
            decay_steps: 10,
        };
        assert_eq!(sched.value(0), 1.0);
        assert!((sched.value(5) - 0.5).abs() < 1e-12);
        assert_eq!(sched.value(10), 0.0);
        assert_eq!(sched.value(99), 0.0);
    }

    #[test]
    fn terminal_update_with_unit_rate_writes_reward() {
        let mut agent = tiny_agent(1.0, 0.9);
        let phi = one_hot(2, 0);
        agent.q_update_features(&phi, 1, 1.0, None, 1.0).unwrap();
        assert!((agent.q_values_features(&phi)[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut agent = tiny_agent(0.0, 0.9);
        let phi = one_hot(2, 0);
        agent
            .q_update_features(&phi, 0, 5.0, Some(&one_hot(2, 1)), 1.0)
            .unwrap();
        assert!(agent.weights.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn two_state_chain_converges_to_bellman_fixpoint() {
        // State 0 steps to state 1 with reward 0; state 1 loops on itself
        // with reward 1. Hand-solved fixpoint: Q(1) = 1/(1-gamma) = 10,
        // Q(0) = gamma * Q(1) = 9.
        let gamma = 0.9;
        let mut agent = tiny_agent(0.25, gamma);
        let s0 = one_hot(2, 0);
        let s1 = one_hot(2, 1);
        for _ in 0..3000 {
            agent
                .q_update_features(&s0, 0, 0.0, Some(&s1), 1.0)
                .unwrap();
            agent
                .q_update_features(&s1, 0, 1.0, Some(&s1), 1.0)
                .unwrap();
        }
        let q1 = agent.q_values_features(&s1)[0];
        let q0 = agent.q_values_features(&s0)[0];
        assert!((q1 - 10.0).abs() < 1e-6, "Q(loop) = {q1}");
        assert!((q0 - 9.0).abs() < 1e-6, "Q(chain) = {q0}");
    }

    #[test]
    fn update_touches_only_support_rows() {
        let cfg = QAgentConfig {
            encoder: LosseConfig::new(2, 4, 2, 6, 3),
            action_count: 3,
            gamma: 0.95,
            learning_rate: 0.5,
            epsilon: EpsilonSchedule::constant(0.1),
            state_bounds: vec![(-1.0, 1.0), (-1.0, 1.0)],
            seed: 9,
        };
        let mut agent = QAgent::new(cfg).unwrap();
        // Seed some weights so rows are nonzero.
        agent
            .q_update(&[0.3, -0.2], 1, 1.0, &[0.4, -0.1], false)
            .unwrap();
        let before = agent.weights.clone();
        let s = [0.7, 0.6];
        let phi = agent.encode_state(&s).unwrap();
        agent.q_update(&s, 2, -1.0, &[0.6, 0.5], false).unwrap();
        let support: std::collections::HashSet<usize> = phi.indices().iter().copied().collect();
        for j in 0..before.nrows() {
            for a in 0..3 {
                if !(support.contains(&j) && a == 2) {
                    assert_eq!(
                        agent.weights[[j, a]].to_bits(),
                        before[[j, a]].to_bits(),
                        "row {j} action {a} moved unexpectedly"
                    );
                }
            }
        }
    }

    #[test]
    fn positive_weight_scaling_keeps_greedy_action() {
        let cfg = QAgentConfig {
            encoder: LosseConfig::new(2, 3, 2, 5, 8),
            action_count: 4,
            gamma: 0.9,
            learning_rate: 0.2,
            epsilon: EpsilonSchedule::constant(0.0),
            state_bounds: vec![(0.0, 1.0), (0.0, 1.0)],
            seed: 4,
        };
        let mut agent = QAgent::new(cfg).unwrap();
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let s = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let ns = vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            agent
                .q_update(&s, rng.random_range(0..4), rng.random::<f64>(), &ns, false)
                .unwrap();
        }
        let states: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let before: Vec<usize> = states
            .iter()
            .map(|s| agent.greedy_action(s).unwrap())
            .collect();
        agent.weights.mapv_inplace(|w| w * 3.5);
        let after: Vec<usize> = states
            .iter()
            .map(|s| agent.greedy_action(s).unwrap())
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn batch_update_matches_averaged_scale() {
        let mut single = tiny_agent(0.5, 0.9);
        let mut batched = tiny_agent(0.5, 0.9);
        // Two identical terminal transitions at state encoded from 0.0.
        let s = vec![0.0];
        single.q_update(&s, 0, 2.0, &s, true).unwrap();
        let batch = vec![
            (s.clone(), 0usize, 2.0, s.clone(), true),
            (s.clone(), 0usize, 2.0, s.clone(), true),
        ];
        batched.q_update_batch(&batch).unwrap();
        for (a, b) in single.weights.iter().zip(batched.weights.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
