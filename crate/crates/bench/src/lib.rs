//! Evaluation harness for the assessor: instance manifests and label
//! patches, accuracy/applicability/executability, best-of-two
//! aggregation, difficulty stratification, and a synthetic mini-benchmark.

pub mod error;
pub mod manifest;
pub mod metrics;
pub mod patch;
pub mod report;
pub mod results;
pub mod runner;
pub mod stratify;
pub mod synth;

pub use error::BenchError;
pub use manifest::{BenchmarkInstance, Difficulty, Manifest, StratificationFeatures};
pub use metrics::{
    accuracy, applicability, best_of_two, breakdown, confusion, executability, Confusion, InstanceResult, LevelMetrics,
    MetricError, MetricSet, RunAttempt,
};
pub use patch::{Patch, PatchFile};
pub use runner::{run_benchmark, BenchOptions};
pub use stratify::stratify;
