//! Locality-sensitive sparse encoding: random projection plus soft binning.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LosseError, Result};
use crate::util::fnv1a64;

use super::{ensure_finite, SparseVector};

/// How a coordinate's two neighboring edges receive their values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BinMode {
    /// Each edge receives its proximity to the value (multilinear
    /// interpolation weights). Continuous in the input.
    #[default]
    Interpolation,
    /// Each edge receives its normalized distance to the value, the inverse
    /// of interpolation. Discontinuous where the value crosses an edge.
    Distance,
}

/// Geometry and seeding of a [`LosseEncoder`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosseConfig {
    /// Raw input dimensionality.
    pub input_dim: usize,
    /// Number of independent lattices (grids).
    pub kappa: usize,
    /// Dimensionality of each lattice.
    pub rho: usize,
    /// Edges per lattice axis; per-grid feature length is `lambda^rho`.
    pub lambda: usize,
    /// Raw inputs are clamped into `[-input_bound, input_bound]`.
    #[serde(default = "default_input_bound")]
    pub input_bound: f64,
    /// Span of projected space covered by the edges.
    #[serde(default = "default_bin_range")]
    pub bin_range: (f64, f64),
    #[serde(default)]
    pub bin_mode: BinMode,
    pub seed: u64,
}

fn default_input_bound() -> f64 {
    3.0
}

fn default_bin_range() -> (f64, f64) {
    (-3.0, 3.0)
}

impl LosseConfig {
    pub fn new(input_dim: usize, kappa: usize, rho: usize, lambda: usize, seed: u64) -> Self {
        LosseConfig {
            input_dim,
            kappa,
            rho,
            lambda,
            input_bound: default_input_bound(),
            bin_range: default_bin_range(),
            bin_mode: BinMode::default(),
            seed,
        }
    }

    pub fn with_bin_mode(mut self, mode: BinMode) -> Self {
        self.bin_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.kappa == 0 || self.rho == 0 {
            return Err(LosseError::Config(
                "input_dim, kappa and rho must all be positive".into(),
            ));
        }
        if self.lambda < 2 {
            return Err(LosseError::Config(format!(
                "lambda must be at least 2, got {}",
                self.lambda
            )));
        }
        if !(self.input_bound > 0.0) {
            return Err(LosseError::Config("input_bound must be positive".into()));
        }
        if !(self.bin_range.0 < self.bin_range.1)
            || !self.bin_range.0.is_finite()
            || !self.bin_range.1.is_finite()
        {
            return Err(LosseError::Config(format!(
                "bin_range must satisfy lo < hi, got ({}, {})",
                self.bin_range.0, self.bin_range.1
            )));
        }
        self.lambda
            .checked_pow(self.rho as u32)
            .and_then(|g| g.checked_mul(self.kappa))
            .ok_or_else(|| LosseError::Config("kappa * lambda^rho overflows".into()))?;
        Ok(())
    }

    /// Total feature dimension `kappa * lambda^rho`.
    pub fn output_dim(&self) -> usize {
        self.kappa * self.lambda.pow(self.rho as u32)
    }

    /// Upper bound on nonzeros per encoding: `kappa * 2^rho`.
    pub fn support_bound(&self) -> usize {
        self.kappa * (1usize << self.rho)
    }

    /// Stable hash of all fields, recorded in snapshots and manifests.
    pub fn config_hash(&self) -> u64 {
        let mut bytes = Vec::with_capacity(64);
        for v in [
            self.input_dim as u64,
            self.kappa as u64,
            self.rho as u64,
            self.lambda as u64,
            self.input_bound.to_bits(),
            self.bin_range.0.to_bits(),
            self.bin_range.1.to_bits(),
            match self.bin_mode {
                BinMode::Interpolation => 0,
                BinMode::Distance => 1,
            },
            self.seed,
        ] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fnv1a64(&bytes)
    }
}

/// Per-axis soft binning result: the left edge index and the values assigned
/// to the left and right neighboring edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBin {
    pub left_index: usize,
    pub left_value: f64,
    pub right_value: f64,
}

/// Locates the two neighboring edges of `v` among `edges` evenly spaced
/// positions over `range` and assigns each a value according to `mode`.
/// The two values always sum to 1; out-of-range values clamp to the span
/// boundary, and a value exactly on an edge gives that edge full weight.
pub fn soft_bin_axis(v: f64, edges: usize, range: (f64, f64), mode: BinMode) -> Result<AxisBin> {
    if v.is_nan() {
        return Err(LosseError::Value("cannot bin NaN".into()));
    }
    debug_assert!(edges >= 2);
    let (lo, hi) = range;
    let spacing = (hi - lo) / (edges - 1) as f64;
    let v = v.clamp(lo, hi);
    let mut left = ((v - lo) / spacing).floor() as usize;
    if left > edges - 2 {
        left = edges - 2;
    }
    let edge = lo + left as f64 * spacing;
    let t = ((v - edge) / spacing).clamp(0.0, 1.0);
    let (left_value, right_value) = match mode {
        BinMode::Interpolation => (1.0 - t, t),
        BinMode::Distance => {
            // Exact edge hits keep full weight on the edge that was hit.
            if t == 0.0 {
                (1.0, 0.0)
            } else if t == 1.0 {
                (0.0, 1.0)
            } else {
                (t, 1.0 - t)
            }
        }
    };
    Ok(AxisBin {
        left_index: left,
        left_value,
        right_value,
    })
}

/// Frozen random projection plus soft-binning geometry.
///
/// Construction with the same config (including seed) always yields the same
/// projection matrix, so encodings are reproducible bit for bit. Encoders are
/// immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct LosseEncoder {
    config: LosseConfig,
    /// `(kappa * rho) x input_dim`; rows `g*rho..(g+1)*rho` belong to grid `g`.
    projection: Array2<f64>,
}

impl LosseEncoder {
    pub fn new(config: LosseConfig) -> Result<Self> {
        config.validate()?;
        let rows = config.kappa * config.rho;
        let std = (1.0 / config.input_dim as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = StandardNormal;
        let projection = Array2::from_shape_fn((rows, config.input_dim), |_| {
            let z: f64 = normal.sample(&mut rng);
            z * std
        });
        Ok(LosseEncoder { config, projection })
    }

    pub fn config(&self) -> &LosseConfig {
        &self.config
    }

    pub fn projection(&self) -> &Array2<f64> {
        &self.projection
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim()
    }

    pub fn support_bound(&self) -> usize {
        self.config.support_bound()
    }

    /// Applies the projection: `x -> P x`, of length `kappa * rho`.
    /// Callers are expected to clamp `x` into the input bound first.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.config.input_dim {
            return Err(LosseError::shape(
                format!("input of length {}", self.config.input_dim),
                format!("length {}", x.len()),
            ));
        }
        ensure_finite(x, "projection input")?;
        let out = self
            .projection
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(x).map(|(p, v)| p * v).sum())
            .collect();
        Ok(out)
    }

    /// Full encoding: clamp, project, then soft-bin each grid's coordinates
    /// and emit the tensor product of per-axis values over each lattice.
    ///
    /// Per grid, the emitted cell values sum to 1 and at most `2^rho` are
    /// nonzero, so the whole encoding has at most `kappa * 2^rho` nonzeros.
    pub fn encode(&self, x: &[f64]) -> Result<SparseVector> {
        let clamped = super::clamp_input(x, self.config.input_bound);
        let sigma = self.project(&clamped)?;
        let cfg = &self.config;
        let grid_len = cfg.lambda.pow(cfg.rho as u32);
        let corners = 1usize << cfg.rho;
        let mut indices = Vec::with_capacity(cfg.support_bound());
        let mut values = Vec::with_capacity(cfg.support_bound());
        let mut bins = Vec::with_capacity(cfg.rho);
        for g in 0..cfg.kappa {
            bins.clear();
            for a in 0..cfg.rho {
                bins.push(soft_bin_axis(
                    sigma[g * cfg.rho + a],
                    cfg.lambda,
                    cfg.bin_range,
                    cfg.bin_mode,
                )?);
            }
            let base = g * grid_len;
            for corner in 0..corners {
                let mut idx = 0usize;
                let mut val = 1.0f64;
                for (a, bin) in bins.iter().enumerate() {
                    let bit = (corner >> (cfg.rho - 1 - a)) & 1;
                    idx = idx * cfg.lambda + bin.left_index + bit;
                    val *= if bit == 0 {
                        bin.left_value
                    } else {
                        bin.right_value
                    };
                }
                if val != 0.0 {
                    indices.push(base + idx);
                    values.push(val);
                }
            }
        }
        Ok(SparseVector::from_sorted_unchecked(
            cfg.output_dim(),
            indices,
            values,
        ))
    }
}
