//! Experiment runner for `shape-core`: single-scene estimation, Monte-Carlo
//! error-decay simulations and the region-construction timing bench.

pub mod bench;
pub mod experiment;
pub mod report;

pub use bench::{bench, write_bench_csv, BenchRow};
pub use experiment::{
    simulate, EstimatorSettings, ExperimentConfig, ExperimentError, ExperimentResult,
    ExperimentRow, Method, Mode, SimulationPlan,
};
pub use report::{estimate_scene, EstimateReport};
