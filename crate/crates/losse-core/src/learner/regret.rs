//! Predict-then-update loss accounting and regret against the
//! best-in-hindsight batch solution.

use ndarray::Array2;

use crate::error::{LosseError, Result};

use super::{linear_predict, Sample};

/// Squared L2 loss between a prediction and its target.
pub fn squared_loss(pred: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(pred.len(), target.len());
    pred.iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum()
}

/// Total loss of a fixed weight matrix replayed over a sample list.
pub fn replay_loss(weights: &Array2<f64>, samples: &[Sample]) -> f64 {
    samples
        .iter()
        .map(|(phi, y)| squared_loss(&linear_predict(weights, phi), y))
        .sum()
}

/// Append-only record of per-step losses, recorded *before* each update per
/// the online protocol (the loss is suffered, then the target is revealed).
#[derive(Debug, Clone, Default)]
pub struct RegretLedger {
    losses: Vec<f64>,
    cumulative: f64,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, loss: f64) -> Result<()> {
        if !loss.is_finite() || loss < 0.0 {
            return Err(LosseError::Value(format!(
                "per-step loss must be finite and nonnegative, got {loss}"
            )));
        }
        self.losses.push(loss);
        self.cumulative += loss;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }

    pub fn per_step_losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cumulative
    }

    /// Regret relative to a comparator's total loss over the same steps.
    pub fn regret(&self, comparator_loss: f64) -> Result<f64> {
        if self.losses.is_empty() {
            return Err(LosseError::Value(
                "regret requested before any recorded sample".into(),
            ));
        }
        Ok(self.cumulative - comparator_loss)
    }

    /// Regret against the ridge batch solution solved over `samples`
    /// (the best fixed hypothesis in hindsight).
    pub fn regret_vs_batch(&self, samples: &[Sample], epsilon: f64) -> Result<f64> {
        let oracle = super::solve_batch_oracle(samples, epsilon)?;
        self.regret(replay_loss(&oracle, samples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Features;
    use crate::learner::FtlLearner;

    #[test]
    fn constant_target_regret_is_first_loss() {
        // phi = 1, y = 1 forever: the learner fits exactly after one sample,
        // so cumulative loss stays at the first-step loss of 1.
        let mut learner = FtlLearner::new(1, 1, 0.0).unwrap();
        let mut ledger = RegretLedger::new();
        let mut samples: Vec<Sample> = Vec::new();
        for _ in 0..20 {
            let phi = Features::Dense(vec![1.0]);
            let pred = learner.predict(&phi).unwrap();
            ledger.record(squared_loss(&pred, &[1.0])).unwrap();
            learner.observe_dense(&[1.0], &[1.0]).unwrap();
            samples.push((phi, vec![1.0]));
        }
        assert!((ledger.cumulative_loss() - 1.0).abs() < 1e-12);
        let regret = ledger.regret_vs_batch(&samples, 0.0).unwrap();
        assert!((regret - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cumulative_equals_sum_and_empty_errors() {
        let mut ledger = RegretLedger::new();
        assert!(ledger.regret(0.0).is_err());
        for l in [0.5, 0.25, 1.0] {
            ledger.record(l).unwrap();
        }
        let sum: f64 = ledger.per_step_losses().iter().sum();
        assert_eq!(ledger.cumulative_loss(), sum);
        assert!(ledger.record(-1.0).is_err());
        assert!(ledger.record(f64::NAN).is_err());
    }
}
