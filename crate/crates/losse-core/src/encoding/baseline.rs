//! Baseline random-feature encoders: Fourier, ReLU and tile coding.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LosseError, Result};

use super::{ensure_finite, Features, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    /// `cos(P x + b)` with phases uniform on `[0, 2pi)`; dense output.
    Fourier,
    /// `max(0, P x + b)`; dense storage with data-dependent sparsity.
    Relu,
    /// Hard one-hot binning of random projections: exactly `grids` nonzeros.
    TileCode,
}

/// Configuration for a [`BaselineEncoder`].
///
/// `projection_scale` multiplies the base `N(0, 1/input_dim)` entry standard
/// deviation; sweeps over it are driven externally. `grids`/`rho`/`bin_range`
/// only matter for tile coding, where `output_dim` must factor as
/// `grids * cells_per_axis^rho` for an integer number of cells per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEncoderConfig {
    pub kind: BaselineKind,
    pub input_dim: usize,
    pub output_dim: usize,
    #[serde(default = "default_scale")]
    pub projection_scale: f64,
    pub seed: u64,
    /// Tile coding: number of independent tilings (= nonzeros per encoding).
    #[serde(default = "default_grids")]
    pub grids: usize,
    /// Tile coding: lattice dimensionality per tiling.
    #[serde(default = "default_grids")]
    pub rho: usize,
    /// Tile coding: projected-space span covered by the cells.
    #[serde(default = "default_bin_range")]
    pub bin_range: (f64, f64),
}

fn default_scale() -> f64 {
    1.0
}

fn default_grids() -> usize {
    1
}

fn default_bin_range() -> (f64, f64) {
    (-3.0, 3.0)
}

impl BaselineEncoderConfig {
    pub fn new(kind: BaselineKind, input_dim: usize, output_dim: usize, seed: u64) -> Self {
        BaselineEncoderConfig {
            kind,
            input_dim,
            output_dim,
            projection_scale: default_scale(),
            seed,
            grids: default_grids(),
            rho: default_grids(),
            bin_range: default_bin_range(),
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.projection_scale = scale;
        self
    }

    pub fn with_tiling(mut self, grids: usize, rho: usize) -> Self {
        self.grids = grids;
        self.rho = rho;
        self
    }

    fn validate(&self) -> Result<usize> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(LosseError::Config(
                "input_dim and output_dim must be positive".into(),
            ));
        }
        if !(self.projection_scale > 0.0) {
            return Err(LosseError::Config(
                "projection_scale must be positive".into(),
            ));
        }
        match self.kind {
            BaselineKind::Fourier | BaselineKind::Relu => Ok(0),
            BaselineKind::TileCode => {
                if self.grids == 0 || self.rho == 0 {
                    return Err(LosseError::Config(
                        "tile coding needs positive grids and rho".into(),
                    ));
                }
                if !(self.bin_range.0 < self.bin_range.1) {
                    return Err(LosseError::Config("bin_range must satisfy lo < hi".into()));
                }
                if self.output_dim % self.grids != 0 {
                    return Err(LosseError::Config(format!(
                        "output_dim {} not divisible by grids {}",
                        self.output_dim, self.grids
                    )));
                }
                let per_grid = self.output_dim / self.grids;
                let cells = (per_grid as f64).powf(1.0 / self.rho as f64).round() as usize;
                if cells == 0 || cells.pow(self.rho as u32) != per_grid {
                    return Err(LosseError::Config(format!(
                        "per-grid length {per_grid} is not an integer rho-th power"
                    )));
                }
                Ok(cells)
            }
        }
    }
}

/// Frozen baseline encoder; see [`BaselineKind`] for the three variants.
#[derive(Debug, Clone)]
pub struct BaselineEncoder {
    config: BaselineEncoderConfig,
    /// Fourier/ReLU: `output_dim x input_dim`. TileCode: `(grids*rho) x input_dim`.
    pub(crate) projection: Array2<f64>,
    /// Fourier: phases in `[0, 2pi)`. ReLU: offsets in `[-1, 1]`. Unused otherwise.
    pub(crate) phases: Vec<f64>,
    /// TileCode only: cells per lattice axis.
    cells_per_axis: usize,
}

impl BaselineEncoder {
    pub fn new(config: BaselineEncoderConfig) -> Result<Self> {
        let cells_per_axis = config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let std = config.projection_scale / (config.input_dim as f64).sqrt();
        let rows = match config.kind {
            BaselineKind::Fourier | BaselineKind::Relu => config.output_dim,
            BaselineKind::TileCode => config.grids * config.rho,
        };
        let normal = StandardNormal;
        let projection = Array2::from_shape_fn((rows, config.input_dim), |_| {
            let z: f64 = normal.sample(&mut rng);
            z * std
        });
        let phases = match config.kind {
            BaselineKind::Fourier => (0..config.output_dim)
                .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                .collect(),
            BaselineKind::Relu => (0..config.output_dim)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
            BaselineKind::TileCode => Vec::new(),
        };
        Ok(BaselineEncoder {
            config,
            projection,
            phases,
            cells_per_axis,
        })
    }

    pub fn config(&self) -> &BaselineEncoderConfig {
        &self.config
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim
    }

    pub fn encode(&self, x: &[f64]) -> Result<Features> {
        if x.len() != self.config.input_dim {
            return Err(LosseError::shape(
                format!("input of length {}", self.config.input_dim),
                format!("length {}", x.len()),
            ));
        }
        ensure_finite(x, "encoder input")?;
        match self.config.kind {
            BaselineKind::Fourier => {
                let out = self
                    .projection
                    .rows()
                    .into_iter()
                    .zip(&self.phases)
                    .map(|(row, b)| {
                        let z: f64 = row.iter().zip(x).map(|(p, v)| p * v).sum();
                        (z + b).cos()
                    })
                    .collect::<Vec<_>>();
                Ok(Features::Dense(out))
            }
            BaselineKind::Relu => {
                let out = self
                    .projection
                    .rows()
                    .into_iter()
                    .zip(&self.phases)
                    .map(|(row, b)| {
                        let z: f64 = row.iter().zip(x).map(|(p, v)| p * v).sum();
                        (z + b).max(0.0)
                    })
                    .collect::<Vec<_>>();
                Ok(Features::Dense(out))
            }
            BaselineKind::TileCode => {
                let cfg = &self.config;
                let cells = self.cells_per_axis;
                let per_grid = cells.pow(cfg.rho as u32);
                let (lo, hi) = cfg.bin_range;
                let width = (hi - lo) / cells as f64;
                let mut indices = Vec::with_capacity(cfg.grids);
                for g in 0..cfg.grids {
                    let mut idx = 0usize;
                    for a in 0..cfg.rho {
                        let row = self.projection.row(g * cfg.rho + a);
                        let z: f64 = row.iter().zip(x).map(|(p, v)| p * v).sum();
                        let mut cell = ((z - lo) / width).floor() as isize;
                        cell = cell.clamp(0, cells as isize - 1);
                        idx = idx * cells + cell as usize;
                    }
                    indices.push(g * per_grid + idx);
                }
                let values = vec![1.0; indices.len()];
                Ok(Features::Sparse(SparseVector::from_sorted_unchecked(
                    cfg.output_dim,
                    indices,
                    values,
                )))
            }
        }
    }
}
