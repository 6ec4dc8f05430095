//! Scenario runner for the photonet transport engine: run configs, parameter sweeps,
//! trace comparison and the built-in two-waveguide scenario.

pub mod compare;
pub mod config;
pub mod plots;
pub mod runner;
pub mod scenario;
