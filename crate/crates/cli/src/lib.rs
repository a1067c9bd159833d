//! Experiment runner for the smcabc samplers: configuration, inference and
//! forwards runs, and the α benchmark.

pub mod bench;
pub mod config;
pub mod run;

pub use bench::{bench_alpha, write_bench, BenchOutput, BenchRecord, BenchSummary};
pub use config::{ExperimentConfig, ExperimentKind, Method, Preset, Target};
pub use run::{forwards, run_experiment, run_method, setup, simulate_forwards, Forwards, Outcome, Setup};
