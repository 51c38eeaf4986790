//! Comparison methods: full training, magnitude pruning and random pruning,
//! each pruning method followed by fine-tuning.

use serde::{Deserialize, Serialize};

use crate::data::Samples;
use crate::error::{Error, Result};
use crate::nn::{random_network, train, Network, Topology, TrainConfig};
use crate::rng::{Domain, Stream};
use crate::topology::{effective_topology, select_neurons};

/// Number of independent random-pruning runs averaged per seed.
pub const RANDOM_PRUNE_REPEATS: usize = 5;

/// Shrinks `source` (a fully populated topology) to `target`, which has the
/// same length and may use width 0 for hidden layers that disappear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneSpec {
    pub source_topology: Topology,
    pub target_topology: Topology,
}

impl PruneSpec {
    pub fn new(source_topology: Topology, target_topology: Topology) -> Result<Self> {
        let s = source_topology.widths();
        let t = target_topology.widths();
        let fail = |reason: String| Err(Error::InvalidPruneSpec(reason));
        if s.len() != t.len() {
            return fail(format!(
                "{source_topology} and {target_topology} differ in depth"
            ));
        }
        if s[0] != t[0] || s[s.len() - 1] != t[t.len() - 1] {
            return fail(format!(
                "{source_topology} and {target_topology} differ in input or output width"
            ));
        }
        if source_topology.hidden().contains(&0) {
            return fail(format!(
                "source {source_topology} has an empty hidden layer"
            ));
        }
        if s.iter().zip(t).any(|(a, b)| b > a) {
            return fail(format!(
                "target {target_topology} is wider than {source_topology}"
            ));
        }
        Ok(PruneSpec {
            source_topology,
            target_topology,
        })
    }

    /// Shape of every pruned network.
    pub fn effective_target(&self) -> Topology {
        effective_topology(&self.target_topology)
    }

    fn check_source(&self, net: &Network) -> Result<()> {
        if net.topology() != &self.source_topology {
            return Err(Error::TopologyMismatch {
                network: net.topology().widths().to_vec(),
                expected: self.source_topology.widths().to_vec(),
            });
        }
        Ok(())
    }

    fn target_width(&self, hidden: usize) -> usize {
        self.target_topology.hidden()[hidden]
    }
}

/// Trains a fresh random network of `topology_0`. The same stream supplies the
/// initial weights and then the epoch shuffles.
pub fn full_training(
    topology_0: &Topology,
    data: &Samples,
    cfg: &TrainConfig,
    rng: &mut Stream,
) -> Result<Network> {
    let net = random_network(topology_0, rng)?;
    train(&net, data, cfg, rng)
}

/// L2 norm of each neuron's incoming weights, optionally with its bias.
pub fn neuron_norms(net: &Network, hidden: usize, include_bias: bool) -> Vec<f64> {
    let layer = &net.layers()[hidden];
    (0..layer.outputs())
        .map(|i| {
            let b = if include_bias {
                layer.biases()[i].powi(2)
            } else {
                0.0
            };
            (layer.row(i).iter().map(|w| w * w).sum::<f64>() + b).sqrt()
        })
        .collect()
}

/// Indices of the `k` largest scores, lower index first among equals,
/// returned in ascending index order.
pub fn keep_largest(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Keeps, in every hidden layer, the neurons with the largest incoming norms.
///
/// Scores come from the trained weights of each layer as given, so the result
/// does not depend on the order layers are visited. `rng` is only drawn from
/// when a hidden layer is removed entirely and its neighbours need a fresh
/// connecting matrix.
pub fn magnitude_prune(
    trained: &Network,
    spec: &PruneSpec,
    include_bias: bool,
    rng: &mut Stream,
) -> Result<Network> {
    spec.check_source(trained)?;
    let hidden = trained.topology().hidden().len();
    let mut keep = vec![Vec::new(); hidden];
    for h in (0..hidden).rev() {
        keep[h] = keep_largest(
            &neuron_norms(trained, h, include_bias),
            spec.target_width(h),
        );
    }
    select_neurons(trained, &keep, rng)
}

/// Keeps a uniformly random subset of the target size in every hidden layer.
/// Subsets are drawn first to last from `rng`, followed by any bridge matrices.
pub fn random_prune(trained: &Network, spec: &PruneSpec, rng: &mut Stream) -> Result<Network> {
    spec.check_source(trained)?;
    let widths = trained.topology().hidden().to_vec();
    let keep: Vec<Vec<usize>> = widths
        .iter()
        .enumerate()
        .map(|(h, &n)| rng.sample_indices(n, spec.target_width(h)))
        .collect();
    select_neurons(trained, &keep, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMethod {
    Magnitude,
    Random,
}

/// How a pruning pipeline divides training between the full and pruned network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetSplit {
    /// `E` epochs of full training, then `E` epochs of fine-tuning.
    #[default]
    Sequential,
    /// `ceil(E/2)` epochs of full training, then `floor(E/2)` (at least 1).
    Halved,
}

impl BudgetSplit {
    /// Epochs for the (full training, fine-tuning) phases.
    pub fn epochs(self, epochs: usize) -> (usize, usize) {
        match self {
            BudgetSplit::Sequential => (epochs, epochs),
            BudgetSplit::Halved => (epochs.div_ceil(2), (epochs / 2).max(1)),
        }
    }
}

impl std::str::FromStr for BudgetSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sequential" => Ok(BudgetSplit::Sequential),
            "halved" => Ok(BudgetSplit::Halved),
            other => Err(Error::InvalidConfig(format!(
                "unknown budget split '{other}' (expected sequential or halved)"
            ))),
        }
    }
}

/// Stream for the full training run shared by the full baseline and the
/// pruning pipelines of a seed.
pub fn full_training_stream(seed: u64) -> Stream {
    Stream::substream(seed, Domain::FullTraining, 0)
}

/// Prunes an already trained network and fine-tunes the result.
///
/// Magnitude pruning yields one network; random pruning yields
/// [`RANDOM_PRUNE_REPEATS`], each from its own substreams.
pub fn prune_and_fine_tune(
    method: PruneMethod,
    trained: &Network,
    spec: &PruneSpec,
    data: &Samples,
    fine_tune: &TrainConfig,
    seed: u64,
) -> Result<Vec<Network>> {
    match method {
        PruneMethod::Magnitude => {
            let mut prune_rng = Stream::substream(seed, Domain::MagnitudePrune, 0);
            let mut tune_rng = Stream::substream(seed, Domain::MagnitudeFineTune, 0);
            let pruned = magnitude_prune(trained, spec, true, &mut prune_rng)?;
            Ok(vec![train(&pruned, data, fine_tune, &mut tune_rng)?])
        }
        PruneMethod::Random => (0..RANDOM_PRUNE_REPEATS as u64)
            .map(|r| {
                let mut prune_rng = Stream::substream(seed, Domain::RandomPrune, r);
                let mut tune_rng = Stream::substream(seed, Domain::RandomFineTune, r);
                let pruned = random_prune(trained, spec, &mut prune_rng)?;
                train(&pruned, data, fine_tune, &mut tune_rng)
            })
            .collect(),
    }
}

/// Full training, pruning to `spec`'s target, then fine-tuning, with epochs
/// divided according to `budget`.
pub fn prune_pipeline(
    method: PruneMethod,
    topology_0: &Topology,
    spec: &PruneSpec,
    data: &Samples,
    cfg: &TrainConfig,
    budget: BudgetSplit,
    seed: u64,
) -> Result<Vec<Network>> {
    let (first, second) = budget.epochs(cfg.epochs);
    let full_cfg = TrainConfig {
        epochs: first,
        ..cfg.clone()
    };
    let tune_cfg = TrainConfig {
        epochs: second,
        ..cfg.clone()
    };
    let trained = full_training(topology_0, data, &full_cfg, &mut full_training_stream(seed))?;
    prune_and_fine_tune(method, &trained, spec, data, &tune_cfg, seed)
}
