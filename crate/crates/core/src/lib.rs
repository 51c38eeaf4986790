//! Training-free topology search for small feedforward classifiers, together
//! with the pruning baselines, metrics and experiment harness used to compare
//! against it.

pub mod baselines;
pub mod cloud;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod stats;
pub mod topology;

pub use baselines::{
    full_training, magnitude_prune, prune_pipeline, random_prune, BudgetSplit, PruneMethod,
    PruneSpec,
};
pub use cloud::{
    explore_cloud, explore_one, run_cloud, run_cloud_with, selection_rule, Candidate, CloudConfig,
    CloudResult, ExplorationRecord, Schedule,
};
pub use data::{load_dataset, stratified_split, Dataset, Samples, SplitPair};
pub use error::{Error, Result};
pub use metrics::{accuracy, auc_roc, macro_f1, MetricSet};
pub use nn::{Network, Topology, TrainConfig};
pub use rng::{Domain, Stream};
pub use stats::{wilcoxon_signed_rank, PairedTestResult};
