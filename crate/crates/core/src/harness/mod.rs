//! Experiment orchestration: metrics, incidence reports, counter-examples,
//! and the CLI-facing experiment runner.

pub mod counterexample;
pub mod experiment;
pub mod incidence;
pub mod metrics;
pub mod models;
