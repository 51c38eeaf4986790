//! Grid sweeps over the cloud's threshold, size and elimination step.

use serde::{Deserialize, Serialize};

use crate::cloud::{explore_cloud, run_cloud, Schedule};
use crate::data::PreparedSplit;
use crate::error::Result;
use crate::experiment::config::ExperimentConfig;
use crate::experiment::run::{load_prepared, thread_pool};
use crate::metrics::evaluate_network;
use crate::nn::Topology;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub thetas: Vec<f64>,
    pub cloud_sizes: Vec<usize>,
    pub n_elims: Vec<usize>,
}

impl SweepGrid {
    /// Cells in row-major order: threshold slowest, elimination step fastest.
    pub fn cells(&self) -> Vec<(f64, usize, usize)> {
        let mut out = Vec::new();
        for &t in &self.thetas {
            for &n in &self.cloud_sizes {
                for &e in &self.n_elims {
                    out.push((t, n, e));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSelection {
    pub network_index: usize,
    pub step_number: usize,
    pub topology: Topology,
    pub parameter_count: usize,
    pub untrained_train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub seed: u64,
    pub theta: f64,
    pub cloud_size: usize,
    pub n_elim: usize,
    pub selection: Option<SweepSelection>,
    /// Test accuracy of the refined selection, when refinement was requested.
    pub test_accuracy: Option<f64>,
    /// Selection differs from the first cell of the same seed.
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub dataset: String,
    pub topology: Topology,
    pub grid: SweepGrid,
    pub refined: bool,
    pub cells: Vec<SweepCell>,
}

pub fn sweep_hyperparams(
    cfg: &ExperimentConfig,
    grid: &SweepGrid,
    refine: bool,
) -> Result<SweepReport> {
    cfg.validate()?;
    if grid.cells().is_empty() {
        return Ok(empty_report(cfg, grid, refine));
    }
    let (_, prepared) = load_prepared(cfg)?;
    sweep_prepared(cfg, &prepared, grid, refine)
}

fn empty_report(cfg: &ExperimentConfig, grid: &SweepGrid, refine: bool) -> SweepReport {
    SweepReport {
        dataset: cfg.dataset.clone(),
        topology: cfg.topology.clone(),
        grid: grid.clone(),
        refined: refine,
        cells: Vec::new(),
    }
}

/// Runs every (seed, cell) pair. Without `refine` the selected candidates
/// are not trained, which is all that selection stability needs.
pub fn sweep_prepared(
    cfg: &ExperimentConfig,
    data: &PreparedSplit,
    grid: &SweepGrid,
    refine: bool,
) -> Result<SweepReport> {
    let mut report = empty_report(cfg, grid, refine);
    let pool = thread_pool(cfg.threads)?;
    for &seed in &cfg.seeds {
        let mut first: Option<Option<(usize, usize)>> = None;
        for (theta, cloud_size, n_elim) in grid.cells() {
            let mut cc = cfg.cloud_config(seed);
            cc.threshold = theta;
            cc.cloud_size = cloud_size;
            cc.n_elim = n_elim;
            let result = pool.install(|| {
                if refine {
                    run_cloud(&cfg.topology, &cc, &data.train)
                } else {
                    explore_cloud(&cfg.topology, &cc, &data.train, Schedule::Parallel)
                }
            })?;
            let selection = result.best.as_ref().map(|b| SweepSelection {
                network_index: b.record.network_index,
                step_number: b.record.step_number,
                topology: b.record.topology.clone(),
                parameter_count: b.record.parameter_count,
                untrained_train_accuracy: b.record.train_accuracy,
            });
            let test_accuracy = match (&result.refined_network, refine) {
                (Some(net), true) => {
                    Some(evaluate_network(net, &data.test, &cfg.topology)?.accuracy)
                }
                _ => None,
            };
            let key = selection.as_ref().map(|s| (s.network_index, s.step_number));
            let changed = *first.get_or_insert(key) != key;
            report.cells.push(SweepCell {
                seed,
                theta,
                cloud_size,
                n_elim,
                selection,
                test_accuracy,
                changed,
            });
        }
    }
    Ok(report)
}
