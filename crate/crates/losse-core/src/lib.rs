//! Online regression and world models that never forget what they saw.
//!
//! The pieces, bottom to top:
//!
//! - [`encoding`]: locality-sensitive sparse encoding (random projection +
//!   soft binning) plus Fourier/ReLU/tile-coding baseline encoders.
//! - [`learner`]: incremental follow-the-leader least squares with exact
//!   sum memories and constant-cost sparse block updates, a gradient-descent
//!   baseline, and regret accounting.
//! - [`world_model`]: delta-state dynamics and reward heads over one shared
//!   encoder, with short-horizon rollouts for planning.
//! - [`env`]: seeded experiment environments (continuous gridworld,
//!   mountain car, acrobot), the piecewise-random-walk stream, and the
//!   image-denoising dataset with IDX ingestion.
//! - [`agent`]: linear Q-learning base agent over sparse state features.
//! - [`dyna`]: the planning loop interleaving interaction, online model
//!   updates, search control and agent learning from model experiences.
//!
//! Multi-seed experiment fan-out goes through [`parallel`], which uses rayon
//! under the default `parallel` feature and a sequential fallback without it.

pub mod agent;
pub mod dyna;
pub mod encoding;
pub mod env;
pub mod error;
pub mod learner;
pub mod linalg;
pub mod parallel;
pub mod util;
pub mod world_model;

pub use error::{LosseError, Result};
