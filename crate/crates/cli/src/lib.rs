//! Experiment harness behind the `fastglt` binary: configuration, method
//! dispatch over one shared Θ₀, and report/CSV emission.

pub mod config;
pub mod harness;

pub use config::{ExperimentConfig, Precision, SuiteConfig, SweepConfig};
pub use harness::{
    analyze, distance_figure, extreme_sweep, load_dataset, mean_dense_accuracy, run_arm, run_experiment,
    run_suite, threads,
    ExtremeRow, SuiteOutcome, SweepRow,
};
