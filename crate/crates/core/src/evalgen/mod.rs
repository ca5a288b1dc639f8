//! Synthetic data generation and the evaluation harness.

mod harness;
mod sample;
pub mod tumor;

pub use harness::{
    compare_runs, evaluate, precision, run_experiment, Comparison, Evaluation, ExperimentConfig, ExperimentReport,
    Learner, RunSpec, StructureKind, SERIES_COLUMNS, TABLE_COLUMNS,
};
pub use sample::{forward_sample, mask_mcar, random_network, random_tree_network, GeneratorSpec, RandomNetSpec};
pub use tumor::{tumor_schema, TumorSchema};
