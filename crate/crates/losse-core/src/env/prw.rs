//! Piecewise-random-walk stream: a nonstationary scalar regression task
//! whose temporal correlation is controlled by a single parameter.
//!
//! Observations are `x_t ~ N(S_t, beta^2)` where the latent center `S_t`
//! drifts every `tau` steps by `S <- (1 - c) S + Z`, `Z ~ N(0, sigma^2)`.
//! All three scalars derive from the correlation level `d in [0, 1)`:
//! `c = 1 - sqrt(1 - d)`, `sigma^2 = d^2 (B/2)^2`, `beta^2 = (1-d)(B/2)^2`,
//! which keeps the equilibrium variance of `x` at `(B/2)^2` for every `d`.
//! At `d = 0` the stream degenerates to i.i.d. draws. Targets are
//! `y = sin(2 pi x^2)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LosseError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrwConfig {
    /// Correlation level `d` in `[0, 1)`.
    pub d: f64,
    /// High-probability bound on the observations.
    #[serde(default = "default_bound")]
    pub bound: f64,
    /// Steps between drifts of the latent center.
    #[serde(default = "default_tau")]
    pub tau: usize,
    pub seed: u64,
}

fn default_bound() -> f64 {
    1.0
}

fn default_tau() -> usize {
    50
}

impl PrwConfig {
    pub fn new(d: f64, seed: u64) -> Self {
        PrwConfig {
            d,
            bound: default_bound(),
            tau: default_tau(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.d) {
            return Err(LosseError::Config(format!(
                "correlation level d must lie in [0, 1), got {}",
                self.d
            )));
        }
        if !(self.bound > 0.0) {
            return Err(LosseError::Config("bound must be positive".into()));
        }
        if self.tau == 0 {
            return Err(LosseError::Config("tau must be at least 1".into()));
        }
        Ok(())
    }

    /// Drift rate `c = 1 - sqrt(1 - d)`.
    pub fn c(&self) -> f64 {
        1.0 - (1.0 - self.d).sqrt()
    }

    /// Drift noise variance `sigma^2 = d^2 (B/2)^2`.
    pub fn sigma_sq(&self) -> f64 {
        self.d * self.d * (self.bound / 2.0) * (self.bound / 2.0)
    }

    /// Observation noise variance `beta^2 = (1 - d)(B/2)^2`.
    pub fn beta_sq(&self) -> f64 {
        (1.0 - self.d) * (self.bound / 2.0) * (self.bound / 2.0)
    }

    /// Equilibrium variance of the latent center: `sigma^2 / (2c - c^2)`,
    /// which simplifies to `d (B/2)^2`; zero when `d = 0`.
    pub fn center_variance(&self) -> f64 {
        self.d * (self.bound / 2.0) * (self.bound / 2.0)
    }

    /// Equilibrium variance of the observations: always `(B/2)^2`.
    pub fn equilibrium_variance(&self) -> f64 {
        (self.bound / 2.0) * (self.bound / 2.0)
    }
}

/// Target function of the stream.
pub fn prw_target(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x * x).sin()
}

#[derive(Debug, Clone)]
pub struct PrwStream {
    cfg: PrwConfig,
    center: f64,
    step: usize,
    rng: ChaCha8Rng,
}

impl PrwStream {
    /// The latent center starts at a draw from its equilibrium distribution
    /// so the stream is stationary from the first sample.
    pub fn new(cfg: PrwConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let z: f64 = StandardNormal.sample(&mut rng);
        let center = z * cfg.center_variance().sqrt();
        Ok(PrwStream {
            cfg,
            center,
            step: 0,
            rng,
        })
    }

    pub fn config(&self) -> &PrwConfig {
        &self.cfg
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// Draws the next `(x, y)` pair, drifting the center every `tau` steps.
    pub fn next_sample(&mut self) -> (f64, f64) {
        if self.step > 0 && self.step % self.cfg.tau == 0 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.center = (1.0 - self.cfg.c()) * self.center + z * self.cfg.sigma_sq().sqrt();
        }
        self.step += 1;
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let x = self.center + z * self.cfg.beta_sq().sqrt();
        (x, prw_target(x))
    }

    /// Independent holdout pairs spread across the centers a training
    /// stream actually visited: center indices are taken evenly over the
    /// realized sequence and each gets a fresh observation draw. This
    /// measures retention over everything the stream covered.
    pub fn holdout_from_centers(
        cfg: &PrwConfig,
        centers: &[f64],
        count: usize,
        seed: u64,
    ) -> Result<Vec<(f64, f64)>> {
        cfg.validate()?;
        if centers.is_empty() {
            return Err(LosseError::Value(
                "holdout requested with no realized centers".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = cfg.beta_sq().sqrt();
        Ok((0..count)
            .map(|i| {
                let idx = i * (centers.len() - 1) / count.saturating_sub(1).max(1);
                let zx: f64 = StandardNormal.sample(&mut rng);
                let x = centers[idx] + zx * beta;
                (x, prw_target(x))
            })
            .collect())
    }

    /// Runs a fresh stream of `len` samples, returning the pairs plus the
    /// center realized at each step (for holdout construction).
    pub fn collect(cfg: &PrwConfig, len: usize) -> Result<(Vec<(f64, f64)>, Vec<f64>)> {
        let mut stream = PrwStream::new(cfg.clone())?;
        let mut pairs = Vec::with_capacity(len);
        let mut centers = Vec::with_capacity(len);
        for _ in 0..len {
            pairs.push(stream.next_sample());
            centers.push(stream.center());
        }
        Ok((pairs, centers))
    }
}
