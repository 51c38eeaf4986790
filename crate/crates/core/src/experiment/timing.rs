//! Wall-clock cost of each method relative to full training.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    full_training, full_training_stream, magnitude_prune, random_prune, PruneSpec,
};
use crate::cloud::run_cloud;
use crate::data::PreparedSplit;
use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, Method};
use crate::experiment::run::{load_prepared, thread_pool};
use crate::nn::{train, Topology, TrainConfig};
use crate::rng::{Domain, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCost {
    pub method: Method,
    pub samples_secs: Vec<f64>,
    pub median_secs: f64,
    /// Median time over the full-training median.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub dataset: String,
    pub seed: u64,
    pub threads: usize,
    pub repeats: usize,
    pub train_rows: usize,
    pub topology: Topology,
    pub target_topology: Topology,
    pub epochs: usize,
    pub methods: Vec<MethodCost>,
    pub exploration_median_secs: f64,
    pub refinement_median_secs: f64,
    /// Exploration time as a fraction of the cloud's total, median over repeats.
    pub exploration_share: f64,
}

impl TimingReport {
    pub fn cost(&self, method: Method) -> Option<&MethodCost> {
        self.methods.iter().find(|m| m.method == method)
    }
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn seconds<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

pub fn time_methods(cfg: &ExperimentConfig) -> Result<TimingReport> {
    cfg.validate()?;
    let (_, prepared) = load_prepared(cfg)?;
    time_prepared(cfg, &prepared)
}

/// Times every method end to end on the first configured seed.
///
/// Cloud: exploration plus refinement. Pruning: full training, pruning and
/// fine-tuning, once (the averaged random-pruning repeats are an evaluation
/// device, not part of the method's cost). Methods are interleaved within
/// each repeat so slow drifts in machine speed affect all of them alike.
pub fn time_prepared(cfg: &ExperimentConfig, data: &PreparedSplit) -> Result<TimingReport> {
    cfg.validate()?;
    let seed = cfg.seeds[0];
    let t0 = &cfg.topology;
    let train_data = &data.train;
    let (first, second) = cfg.budget_split.epochs(cfg.train.epochs);
    let full_cfg = TrainConfig {
        epochs: first,
        ..cfg.train.clone()
    };
    let tune_cfg = TrainConfig {
        epochs: second,
        ..cfg.train.clone()
    };
    let pool = thread_pool(cfg.threads)?;

    let mut samples: Vec<(Method, Vec<f64>)> =
        Method::ALL.iter().map(|&m| (m, Vec::new())).collect();
    let mut exploration = Vec::new();
    let mut refinement = Vec::new();
    let mut shares = Vec::new();
    let mut target: Option<Topology> = None;
    for _ in 0..cfg.timing_repeats {
        let (cloud, cloud_secs) =
            seconds(|| pool.install(|| run_cloud(t0, &cfg.cloud_config(seed), train_data)))?;
        let best = cloud.best.as_ref().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "no cloud member exceeded the threshold {}",
                cfg.threshold
            ))
        })?;
        let spec = PruneSpec::new(t0.clone(), best.record.raw_topology.clone())?;
        target = Some(spec.effective_target());
        exploration.push(cloud.timings.exploration_secs);
        refinement.push(cloud.timings.refinement_secs);
        shares.push(cloud.timings.exploration_secs / cloud_secs);

        let (_, full_secs) =
            seconds(|| full_training(t0, train_data, &cfg.train, &mut full_training_stream(seed)))?;
        let (_, mag_secs) = seconds(|| {
            let trained =
                full_training(t0, train_data, &full_cfg, &mut full_training_stream(seed))?;
            let pruned = magnitude_prune(
                &trained,
                &spec,
                true,
                &mut Stream::substream(seed, Domain::MagnitudePrune, 0),
            )?;
            train(
                &pruned,
                train_data,
                &tune_cfg,
                &mut Stream::substream(seed, Domain::MagnitudeFineTune, 0),
            )
        })?;
        let (_, rnd_secs) = seconds(|| {
            let trained =
                full_training(t0, train_data, &full_cfg, &mut full_training_stream(seed))?;
            let pruned = random_prune(
                &trained,
                &spec,
                &mut Stream::substream(seed, Domain::RandomPrune, 0),
            )?;
            train(
                &pruned,
                train_data,
                &tune_cfg,
                &mut Stream::substream(seed, Domain::RandomFineTune, 0),
            )
        })?;
        for (m, s) in samples.iter_mut() {
            s.push(match m {
                Method::Cloud => cloud_secs,
                Method::FullTraining => full_secs,
                Method::MagnitudePrune => mag_secs,
                Method::RandomPrune => rnd_secs,
            });
        }
    }
    let full_median = median(&samples[1].1);
    let methods = samples
        .into_iter()
        .map(|(method, s)| {
            let median_secs = median(&s);
            MethodCost {
                method,
                ratio: median_secs / full_median,
                samples_secs: s,
                median_secs,
            }
        })
        .collect();
    Ok(TimingReport {
        dataset: cfg.dataset.clone(),
        seed,
        threads: cfg.threads,
        repeats: cfg.timing_repeats,
        train_rows: train_data.len(),
        topology: t0.clone(),
        target_topology: target.expect("at least one repeat"),
        epochs: cfg.train.epochs,
        methods,
        exploration_median_secs: median(&exploration),
        refinement_median_secs: median(&refinement),
        exploration_share: median(&shares),
    })
}
