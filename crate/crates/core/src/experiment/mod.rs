//! Experiment orchestration: configuration, the method comparison, cost
//! measurements, hyperparameter sweeps and report files.

mod config;
mod report;
mod run;
mod sweep;
mod timing;

pub use config::{
    dataset_defaults, DatasetDefaults, ExperimentConfig, Method, SeedSpec, Settings,
    DEFAULT_SPLIT_SEED, DEFAULT_THREADS,
};
pub use report::{emit, Format, Render};
pub use run::{
    load_prepared, run_experiment, run_prepared, sample_std, Aggregate, CloudSelection, Comparison,
    ExperimentReport, ExperimentResults, MethodResult, MethodTiming, RunTimings, SeedResult,
};
pub use sweep::{
    sweep_hyperparams, sweep_prepared, SweepCell, SweepGrid, SweepReport, SweepSelection,
};
pub use timing::{median, time_methods, time_prepared, MethodCost, TimingReport};
