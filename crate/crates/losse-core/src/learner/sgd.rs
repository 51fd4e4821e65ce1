//! Gradient-descent baseline on the same feature representations.

use ndarray::Array2;

use crate::encoding::{ensure_finite, Features};
use crate::error::{LosseError, Result};

use super::{linear_predict, Sample};

/// Linear model trained by (mini-batch) gradient descent on the squared
/// loss. Sparse features touch only the weight rows in their support.
#[derive(Debug, Clone)]
pub struct SgdLearner {
    feature_dim: usize,
    target_dim: usize,
    weights: Array2<f64>,
    learning_rate: f64,
    /// Preferred mini-batch size for drivers that chunk a stream.
    pub batch: Option<usize>,
}

impl SgdLearner {
    pub fn new(feature_dim: usize, target_dim: usize, learning_rate: f64) -> Result<Self> {
        if feature_dim == 0 || target_dim == 0 {
            return Err(LosseError::Config(
                "feature_dim and target_dim must be positive".into(),
            ));
        }
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            return Err(LosseError::Config(format!(
                "learning_rate must be finite and nonnegative, got {learning_rate}"
            )));
        }
        Ok(SgdLearner {
            feature_dim,
            target_dim,
            weights: Array2::zeros((feature_dim, target_dim)),
            learning_rate,
            batch: None,
        })
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = Some(batch);
        self
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn predict(&self, features: &Features) -> Result<Vec<f64>> {
        if features.dim() != self.feature_dim {
            return Err(LosseError::shape(
                format!("features of dimension {}", self.feature_dim),
                format!("dimension {}", features.dim()),
            ));
        }
        Ok(linear_predict(&self.weights, features))
    }

    /// One squared-loss gradient step on a single sample:
    /// `W -= lr * 2 * phi (phi^T W - y)^T`.
    pub fn step(&mut self, features: &Features, y: &[f64]) -> Result<()> {
        self.step_scaled(features, y, 1.0)
    }

    /// One gradient step on the average gradient over a batch.
    pub fn step_batch(&mut self, samples: &[Sample]) -> Result<()> {
        if samples.is_empty() {
            return Ok(());
        }
        // Gradients are evaluated at the current weights for the whole
        // batch; accumulate residuals first, then apply.
        let scale = 1.0 / samples.len() as f64;
        let residuals: Vec<Vec<f64>> = samples
            .iter()
            .map(|(phi, y)| self.residual(phi, y))
            .collect::<Result<_>>()?;
        for ((phi, _), resid) in samples.iter().zip(&residuals) {
            self.apply_gradient(phi, resid, scale);
        }
        Ok(())
    }

    fn step_scaled(&mut self, features: &Features, y: &[f64], scale: f64) -> Result<()> {
        let resid = self.residual(features, y)?;
        self.apply_gradient(features, &resid, scale);
        Ok(())
    }

    fn residual(&self, features: &Features, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.target_dim {
            return Err(LosseError::shape(
                format!("target of length {}", self.target_dim),
                format!("length {}", y.len()),
            ));
        }
        ensure_finite(y, "target")?;
        let mut resid = self.predict(features)?;
        for (r, t) in resid.iter_mut().zip(y) {
            *r -= t;
        }
        ensure_finite(&resid, "gradient residual").map_err(|_| {
            LosseError::Value("non-finite gradient; learning rate likely too large".into())
        })?;
        Ok(resid)
    }

    fn apply_gradient(&mut self, features: &Features, resid: &[f64], scale: f64) {
        let step = 2.0 * self.learning_rate * scale;
        match features {
            Features::Dense(phi) => {
                for (j, &v) in phi.iter().enumerate() {
                    if v != 0.0 {
                        for (c, r) in resid.iter().enumerate() {
                            self.weights[[j, c]] -= step * v * r;
                        }
                    }
                }
            }
            Features::Sparse(phi) => {
                for (j, v) in phi.iter() {
                    for (c, r) in resid.iter().enumerate() {
                        self.weights[[j, c]] -= step * v * r;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::SparseVector;

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut l = SgdLearner::new(3, 1, 0.0).unwrap();
        l.step(&Features::Dense(vec![1.0, 2.0, 3.0]), &[5.0])
            .unwrap();
        assert!(l.weights().iter().all(|w| *w == 0.0));
    }

    #[test]
    fn one_hot_step_matches_hand_computation() {
        let mut l = SgdLearner::new(4, 1, 0.25).unwrap();
        let phi = SparseVector::new(4, vec![2], vec![1.0]).unwrap();
        l.step(&Features::Sparse(phi), &[1.0]).unwrap();
        // -0.25 * 2 * (0 - 1) = 0.5
        assert!((l.weights()[[2, 0]] - 0.5).abs() < 1e-12);
        assert_eq!(l.weights()[[0, 0]], 0.0);
    }

    #[test]
    fn repeated_steps_converge_on_fixed_sample() {
        let mut l = SgdLearner::new(2, 1, 0.1).unwrap();
        let phi = Features::Dense(vec![1.0, 0.5]);
        for _ in 0..2000 {
            l.step(&phi, &[2.0]).unwrap();
        }
        let pred = l.predict(&phi).unwrap()[0];
        assert!((pred - 2.0).abs() < 1e-9, "prediction {pred}");
    }

    #[test]
    fn batch_step_averages_gradients() {
        let mut single = SgdLearner::new(1, 1, 0.1).unwrap();
        single.step(&Features::Dense(vec![1.0]), &[2.0]).unwrap();
        // Batch of two identical samples should equal the single-sample step.
        let mut batched = SgdLearner::new(1, 1, 0.1).unwrap();
        let samples = vec![
            (Features::Dense(vec![1.0]), vec![2.0]),
            (Features::Dense(vec![1.0]), vec![2.0]),
        ];
        batched.step_batch(&samples).unwrap();
        assert!((single.weights()[[0, 0]] - batched.weights()[[0, 0]]).abs() < 1e-12);
    }

    #[test]
    fn divergence_reports_value_error() {
        let mut l = SgdLearner::new(1, 1, 1e12).unwrap();
        let phi = Features::Dense(vec![1.0]);
        let mut failed = false;
        for _ in 0..100 {
            if l.step(&phi, &[1.0]).is_err() {
                failed = true;
                break;
            }
        }
        assert!(failed, "runaway learning rate should surface a value error");
    }
}
