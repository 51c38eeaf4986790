//! The four-method comparison over a list of seeds.

use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    full_training, full_training_stream, prune_and_fine_tune, prune_pipeline, BudgetSplit,
    PruneMethod, PruneSpec,
};
use crate::cloud::run_cloud;
use crate::data::{load_dataset, prepare, Dataset, PreparedSplit};
use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, Method};
use crate::metrics::{evaluate_network, MetricSet};
use crate::nn::{Network, Topology};
use crate::stats::{wilcoxon_signed_rank, PairedTestResult};

/// What the cloud search chose for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSelection {
    pub network_index: usize,
    pub step_number: usize,
    pub untrained_train_accuracy: f64,
    /// Target shape handed to the pruning baselines, emptied layers as zeros.
    pub raw_topology: Topology,
    pub topology: Topology,
    pub exploration_backward_passes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    /// For random pruning, the mean over its repeats.
    pub metrics: MetricSet,
    pub topology: Topology,
    /// Per-repeat metrics (random pruning only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repeats: Vec<MetricSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Diagnostic when the seed aborted; its method results are then missing.
    pub error: Option<String>,
    pub cloud: Option<CloudSelection>,
    pub methods: Vec<MethodResult>,
}

impl SeedResult {
    pub fn get(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: Method,
    /// Seeds contributing.
    pub n: usize,
    pub mean: MetricSet,
    /// Sample standard deviation; zero for a single seed.
    pub std: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: Method,
    /// `accuracy` or `macro_f1`.
    pub metric: String,
    pub n_pairs: usize,
    pub cloud_mean: f64,
    pub baseline_mean: f64,
    pub test: PairedTestResult,
}

/// Everything that is a deterministic function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub provenance: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub seeds: Vec<SeedResult>,
    pub aggregates: Vec<Aggregate>,
    pub comparisons: Vec<Comparison>,
}

impl ExperimentResults {
    pub fn aborted_seeds(&self) -> Vec<u64> {
        self.seeds
            .iter()
            .filter(|s| s.error.is_some())
            .map(|s| s.seed)
            .collect()
    }

    pub fn aggregate(&self, method: Method) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    pub fn comparison(&self, baseline: Method, metric: &str) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.baseline == baseline && c.metric == metric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub seed: u64,
    pub method: Method,
    pub secs: f64,
}

/// Wall-clock measurements, kept apart from the deterministic results.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub total_secs: f64,
    pub per_method: Vec<MethodTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub results: ExperimentResults,
    pub timings: RunTimings,
}

impl ExperimentReport {
    /// JSON of the deterministic part only.
    pub fn results_json(&self) -> String {
        serde_json::to_string_pretty(&self.results).expect("results always serialize")
    }
}

/// Loads the dataset and prepares the configured split.
pub fn load_prepared(cfg: &ExperimentConfig) -> Result<(Dataset, PreparedSplit)> {
    let ds = load_dataset(&cfg.dataset, &cfg.data_dir)?;
    let split = cfg.split.split(&ds)?;
    let prepared = prepare(&ds, split)?;
    info!(
        "{}: {} train rows, {} test rows, topology {}",
        ds.name(),
        prepared.train.len(),
        prepared.test.len(),
        cfg.topology
    );
    Ok((ds, prepared))
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {threads} worker threads: {e}")))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (ds, prepared) = load_prepared(cfg)?;
    run_prepared(cfg, &prepared, ds.provenance())
}

/// Runs every seed on an already prepared split.
pub fn run_prepared(
    cfg: &ExperimentConfig,
    data: &PreparedSplit,
    provenance: &str,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = thread_pool(cfg.threads)?;
    let outcomes: Vec<(SeedResult, Vec<MethodTiming>)> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&s| run_seed(cfg, data, s))
            .collect()
    });
    let (seeds, timings): (Vec<SeedResult>, Vec<Vec<MethodTiming>>) = outcomes.into_iter().unzip();
    for s in &seeds {
        if let Some(e) = &s.error {
            warn!("seed {} aborted: {e}", s.seed);
        }
    }
    let aggregates = aggregate(cfg, &seeds);
    let comparisons = compare(cfg, &seeds)?;
    Ok(ExperimentReport {
        results: ExperimentResults {
            config: cfg.clone(),
            provenance: provenance.to_string(),
            train_rows: data.train.len(),
            test_rows: data.test.len(),
            seeds,
            aggregates,
            comparisons,
        },
        timings: RunTimings {
            total_secs: start.elapsed().as_secs_f64(),
            per_method: timings.into_iter().flatten().collect(),
        },
    })
}

fn run_seed(
    cfg: &ExperimentConfig,
    data: &PreparedSplit,
    seed: u64,
) -> (SeedResult, Vec<MethodTiming>) {
    let mut timings = Vec::new();
    let mut result = SeedResult {
        seed,
        error: None,
        cloud: None,
        methods: Vec::new(),
    };
    if let Err(e) = run_seed_methods(cfg, data, seed, &mut result, &mut timings) {
        result.error = Some(e.to_string());
        result.methods.clear();
    }
    info!("seed {seed} done");
    (result, timings)
}

fn timed<T>(
    timings: &mut Vec<MethodTiming>,
    seed: u64,
    method: Method,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    timings.push(MethodTiming {
        seed,
        method,
        secs: start.elapsed().as_secs_f64(),
    });
    Ok(out)
}

fn run_seed_methods(
    cfg: &ExperimentConfig,
    data: &PreparedSplit,
    seed: u64,
    result: &mut SeedResult,
    timings: &mut Vec<MethodTiming>,
) -> Result<()> {
    let t0 = &cfg.topology;
    let eval = |net: &Network| evaluate_network(net, &data.test, t0);
    let needs_target = cfg.runs(Method::Cloud)
        || cfg.runs(Method::MagnitudePrune)
        || cfg.runs(Method::RandomPrune);

    let mut spec = None;
    if needs_target {
        let cloud = timed(timings, seed, Method::Cloud, || {
            run_cloud(t0, &cfg.cloud_config(seed), &data.train)
        })?;
        let (Some(best), Some(refined)) = (&cloud.best, &cloud.refined_network) else {
            return Err(Error::InvalidConfig(format!(
                "no cloud member exceeded the threshold {} on the training split",
                cfg.threshold
            )));
        };
        result.cloud = Some(CloudSelection {
            network_index: best.record.network_index,
            step_number: best.record.step_number,
            untrained_train_accuracy: best.record.train_accuracy,
            raw_topology: best.record.raw_topology.clone(),
            topology: best.record.topology.clone(),
            exploration_backward_passes: cloud.exploration_backward_passes,
        });
        if cfg.runs(Method::Cloud) {
            result.methods.push(MethodResult {
                method: Method::Cloud,
                metrics: eval(refined)?,
                topology: refined.topology().clone(),
                repeats: Vec::new(),
            });
        }
        spec = Some(PruneSpec::new(
            t0.clone(),
            best.record.raw_topology.clone(),
        )?);
    }

    // With the sequential budget the pruning pipelines start from exactly the
    // network the full-training baseline produces, so it is trained once.
    let shared_full = cfg.budget_split == BudgetSplit::Sequential;
    let mut full_net = None;
    if cfg.runs(Method::FullTraining) || (shared_full && spec.is_some()) {
        let net = timed(timings, seed, Method::FullTraining, || {
            full_training(t0, &data.train, &cfg.train, &mut full_training_stream(seed))
        })?;
        if cfg.runs(Method::FullTraining) {
            result.methods.push(MethodResult {
                method: Method::FullTraining,
                metrics: eval(&net)?,
                topology: net.topology().clone(),
                repeats: Vec::new(),
            });
        }
        full_net = Some(net);
    }

    if let Some(spec) = spec {
        for (method, prune) in [
            (Method::MagnitudePrune, PruneMethod::Magnitude),
            (Method::RandomPrune, PruneMethod::Random),
        ] {
            if !cfg.runs(method) {
                continue;
            }
            let nets = timed(timings, seed, method, || match (&full_net, shared_full) {
                (Some(trained), true) => {
                    prune_and_fine_tune(prune, trained, &spec, &data.train, &cfg.train, seed)
                }
                _ => prune_pipeline(
                    prune,
                    t0,
                    &spec,
                    &data.train,
                    &cfg.train,
                    cfg.budget_split,
                    seed,
                ),
            })?;
            let repeats = nets.iter().map(eval).collect::<Result<Vec<_>>>()?;
            let metrics = MetricSet::mean(&repeats).expect("pipelines return at least one network");
            result.methods.push(MethodResult {
                method,
                metrics,
                topology: nets[0].topology().clone(),
                repeats: if prune == PruneMethod::Random {
                    repeats
                } else {
                    Vec::new()
                },
            });
        }
    }
    result.methods.sort_by_key(|m| m.method);
    Ok(())
}

/// Sample standard deviation (`n - 1` denominator); zero when `n < 2`.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

fn aggregate(cfg: &ExperimentConfig, seeds: &[SeedResult]) -> Vec<Aggregate> {
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    methods
        .into_iter()
        .filter_map(|method| {
            let sets: Vec<MetricSet> = seeds
                .iter()
                .filter_map(|s| s.get(method))
                .map(|m| m.metrics)
                .collect();
            let mean = MetricSet::mean(&sets)?;
            let std_of =
                |f: fn(&MetricSet) -> f64| sample_std(&sets.iter().map(f).collect::<Vec<_>>());
            Some(Aggregate {
                method,
                n: sets.len(),
                mean,
                std: MetricSet {
                    accuracy: std_of(|m| m.accuracy),
                    macro_f1: std_of(|m| m.macro_f1),
                    auc_roc: std_of(|m| m.auc_roc),
                    reduction_percent: std_of(|m| m.reduction_percent),
                },
            })
        })
        .collect()
}

type MetricGetter = fn(&MetricSet) -> f64;

fn compare(cfg: &ExperimentConfig, seeds: &[SeedResult]) -> Result<Vec<Comparison>> {
    if !cfg.runs(Method::Cloud) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for baseline in [
        Method::FullTraining,
        Method::MagnitudePrune,
        Method::RandomPrune,
    ] {
        if !cfg.runs(baseline) {
            continue;
        }
        let metrics: [(&str, MetricGetter); 2] =
            [("accuracy", |m| m.accuracy), ("macro_f1", |m| m.macro_f1)];
        for (name, f) in metrics {
            let pairs: Vec<(f64, f64)> = seeds
                .iter()
                .filter_map(|s| {
                    Some((
                        f(&s.get(Method::Cloud)?.metrics),
                        f(&s.get(baseline)?.metrics),
                    ))
                })
                .collect();
            if pairs.len() < 2 {
                continue;
            }
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            out.push(Comparison {
                baseline,
                metric: name.to_string(),
                n_pairs: a.len(),
                cloud_mean: mean(&a),
                baseline_mean: mean(&b),
                test: wilcoxon_signed_rank(&a, &b)?,
            });
        }
    }
    Ok(out)
}
