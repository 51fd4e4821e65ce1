//! Sparse feature encoders.
//!
//! [`LosseEncoder`] maps raw inputs to high-dimensional sparse real-valued
//! features via a frozen random projection followed by soft binning into
//! flattened lattices. [`BaselineEncoder`] provides random Fourier, random
//! ReLU and random tile-coding encoders for comparison studies.
//!
//! Dense vectors are plain `&[f64]` / `Vec<f64>` throughout; boundary
//! functions reject NaN and infinities via [`ensure_finite`].

mod baseline;
mod losse;

pub use baseline::{BaselineEncoder, BaselineEncoderConfig, BaselineKind};
pub use losse::{soft_bin_axis, AxisBin, BinMode, LosseConfig, LosseEncoder};

use crate::error::{LosseError, Result};

/// Sparse feature vector: index/value pairs over a declared dimension.
///
/// Indices are strictly increasing and in range; values are finite and
/// nonzero. Encoders guarantee these by construction, [`SparseVector::new`]
/// checks them for externally built vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(LosseError::shape(
                format!("{} values", indices.len()),
                format!("{} values", values.len()),
            ));
        }
        let mut prev: Option<usize> = None;
        for &i in &indices {
            if i >= dim {
                return Err(LosseError::Value(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            if let Some(p) = prev {
                if i <= p {
                    return Err(LosseError::Value(format!(
                        "indices must be strictly increasing; saw {p} then {i}"
                    )));
                }
            }
            prev = Some(i);
        }
        for &v in &values {
            if !v.is_finite() || v == 0.0 {
                return Err(LosseError::Value(format!(
                    "sparse values must be finite and nonzero; saw {v}"
                )));
            }
        }
        Ok(SparseVector {
            dim,
            indices,
            values,
        })
    }

    /// Used by encoders whose construction already guarantees the invariants.
    pub(crate) fn from_sorted_unchecked(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.iter().all(|&i| i < dim));
        debug_assert!(values.iter().all(|&v| v.is_finite() && v != 0.0));
        debug_assert_eq!(indices.len(), values.len());
        SparseVector {
            dim,
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Fraction of nonzero entries out of the declared dimension.
    pub fn density(&self) -> f64 {
        self.nnz() as f64 / self.dim as f64
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Multiplies all stored values by `factor` (must be finite, nonzero).
    pub fn scaled(mut self, factor: f64) -> Self {
        debug_assert!(factor.is_finite() && factor != 0.0);
        for v in &mut self.values {
            *v *= factor;
        }
        self
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// Expands to a dense vector, mostly for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// L1 distance to another sparse vector of the same dimension.
    pub fn l1_distance(&self, other: &SparseVector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut total = 0.0;
        let (mut a, mut b) = (0, 0);
        while a < self.nnz() || b < other.nnz() {
            match (self.indices.get(a), other.indices.get(b)) {
                (Some(&ia), Some(&ib)) if ia == ib => {
                    total += (self.values[a] - other.values[b]).abs();
                    a += 1;
                    b += 1;
                }
                (Some(&ia), Some(&ib)) if ia < ib => {
                    total += self.values[a].abs();
                    a += 1;
                }
                (Some(_), Some(_)) => {
                    total += other.values[b].abs();
                    b += 1;
                }
                (Some(_), None) => {
                    total += self.values[a].abs();
                    a += 1;
                }
                (None, Some(_)) => {
                    total += other.values[b].abs();
                    b += 1;
                }
                (None, None) => break,
            }
        }
        total
    }
}

/// Encoder output: dense for Fourier/ReLU features, sparse otherwise.
#[derive(Debug, Clone)]
pub enum Features {
    Dense(Vec<f64>),
    Sparse(SparseVector),
}

impl Features {
    pub fn dim(&self) -> usize {
        match self {
            Features::Dense(v) => v.len(),
            Features::Sparse(s) => s.dim(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Features::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            Features::Sparse(s) => s.nnz(),
        }
    }

    pub fn as_sparse(&self) -> Option<&SparseVector> {
        match self {
            Features::Sparse(s) => Some(s),
            Features::Dense(_) => None,
        }
    }
}

impl From<SparseVector> for Features {
    fn from(s: SparseVector) -> Self {
        Features::Sparse(s)
    }
}

impl From<Vec<f64>> for Features {
    fn from(v: Vec<f64>) -> Self {
        Features::Dense(v)
    }
}

/// Clamps each coordinate into `[-bound, bound]`.
pub fn clamp_input(x: &[f64], bound: f64) -> Vec<f64> {
    debug_assert!(bound > 0.0);
    x.iter().map(|v| v.clamp(-bound, bound)).collect()
}

/// Returns an error naming `what` if any entry is NaN or infinite.
pub fn ensure_finite(x: &[f64], what: &str) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(LosseError::Value(format!(
            "{what} contains non-finite value {v}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_vector_rejects_bad_input() {
        assert!(SparseVector::new(4, vec![0, 2], vec![1.0, 2.0]).is_ok());
        assert!(SparseVector::new(4, vec![2, 0], vec![1.0, 2.0]).is_err());
        assert!(SparseVector::new(4, vec![0, 0], vec![1.0, 2.0]).is_err());
        assert!(SparseVector::new(4, vec![0, 4], vec![1.0, 2.0]).is_err());
        assert!(SparseVector::new(4, vec![0], vec![f64::NAN]).is_err());
        assert!(SparseVector::new(4, vec![0], vec![0.0]).is_err());
        assert!(SparseVector::new(4, vec![0, 1], vec![1.0]).is_err());
    }

    #[test]
    fn clamp_input_examples() {
        assert_eq!(clamp_input(&[5.0, -4.0, 1.0], 3.0), vec![3.0, -3.0, 1.0]);
        assert_eq!(clamp_input(&[0.5, -0.5], 3.0), vec![0.5, -0.5]);
        assert_eq!(clamp_input(&[0.7], 0.5), vec![0.5]);
    }

    #[test]
    fn l1_distance_disjoint_and_overlap() {
        let a = SparseVector::new(6, vec![0, 2], vec![1.0, 2.0]).unwrap();
        let b = SparseVector::new(6, vec![2, 5], vec![0.5, 1.0]).unwrap();
        assert!((a.l1_distance(&b) - (1.0 + 1.5 + 1.0)).abs() < 1e-12);
        assert_eq!(a.l1_distance(&a), 0.0);
    }
}
