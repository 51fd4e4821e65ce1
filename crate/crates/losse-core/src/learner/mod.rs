//! Online linear regression learners over sparse or dense features.
//!
//! [`FtlLearner`] maintains exact sum memories and re-solves weights
//! incrementally (full solve on dense observations, block solve on sparse
//! ones). [`SgdLearner`] is the gradient-descent baseline over the same
//! features, and [`RegretLedger`] does predict-then-update loss accounting.

mod ftl;
mod regret;
mod sgd;

pub use ftl::{
    solve_batch_oracle, BatchAccumulator, FtlLearner, GramMatrix, ObserveOutcome, DENSE_GRAM_LIMIT,
};
pub use regret::{replay_loss, squared_loss, RegretLedger};
pub use sgd::SgdLearner;

use ndarray::Array2;

use crate::encoding::Features;

/// A training pair: features and target vector.
pub type Sample = (Features, Vec<f64>);

/// `W^T phi` for dense or sparse features; sparse inputs touch only the
/// weight rows in their support.
pub fn linear_predict(weights: &Array2<f64>, features: &Features) -> Vec<f64> {
    let target_dim = weights.ncols();
    let mut out = vec![0.0; target_dim];
    match features {
        Features::Dense(phi) => {
            debug_assert_eq!(phi.len(), weights.nrows());
            for (j, &v) in phi.iter().enumerate() {
                if v != 0.0 {
                    let row = weights.row(j);
                    for (o, w) in out.iter_mut().zip(row) {
                        *o += v * w;
                    }
                }
            }
        }
        Features::Sparse(phi) => {
            debug_assert_eq!(phi.dim(), weights.nrows());
            for (j, v) in phi.iter() {
                let row = weights.row(j);
                for (o, w) in out.iter_mut().zip(row) {
                    *o += v * w;
                }
            }
        }
    }
    out
}
