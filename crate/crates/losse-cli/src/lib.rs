//! Experiment front-end library: configuration, drivers, reporting and
//! plotting. The `losse` binary is a thin argument parser over this.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod report;
