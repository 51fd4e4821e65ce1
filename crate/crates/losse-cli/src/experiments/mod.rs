//! Experiment drivers, one module per CLI verb.

pub mod denoise;
pub mod dyna;
pub mod encoder_bench;
pub mod gd_vs_ftl;
pub mod stream;
