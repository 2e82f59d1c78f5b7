//! Command-line driver: configuration parsing and experiment runs.

pub mod config;
pub mod run;
