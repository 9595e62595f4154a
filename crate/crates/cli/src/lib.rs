//! Experiment driver behind the `phaseret` binary.

pub mod commands;
pub mod config;
pub mod render;
