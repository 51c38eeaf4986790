//! Training-free topology search over a cloud of random networks.
//!
//! Every cloud member is drawn from its own RNG substream, shrunk one
//! reduction step at a time and scored by training accuracy using forward
//! passes only. The best member above the threshold (ties go to the smaller
//! network) is then trained once.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Samples;
use crate::error::{Error, Result};
use crate::nn::{
    argmax, backward_passes_on_this_thread, prefix_dots, random_network, sigmoid, train,
    Activations, Layer, Network, Topology, TrainConfig, PREACTIVATION_LIMIT,
};
use crate::rng::{Domain, Stream};
use crate::topology::{
    effective_topology, parameter_count, reconstruct, reduce_topology, Reduction,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudConfig {
    pub cloud_size: usize,
    pub threshold: f64,
    pub n_elim: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        CloudConfig {
            cloud_size: 50,
            threshold: 0.5,
            n_elim: 1,
            train: TrainConfig::default(),
            seed: 0,
        }
    }
}

impl CloudConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cloud_size == 0 {
            return Err(Error::InvalidConfig("cloud size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, 1), got {}",
                self.threshold
            )));
        }
        if self.n_elim == 0 {
            return Err(Error::InvalidConfig("n_elim must be at least 1".into()));
        }
        self.train.validate()
    }
}

/// One evaluated point on a cloud member's trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationRecord {
    pub network_index: usize,
    /// 0 for the initial network, then one per reduction.
    pub step_number: usize,
    /// Shape of the evaluated network.
    pub topology: Topology,
    /// Same shape with emptied hidden layers kept as zeros.
    pub raw_topology: Topology,
    pub parameter_count: usize,
    pub train_accuracy: f64,
    /// True when the reduction leading to this record emptied a layer.
    pub layer_removed_event: bool,
}

/// A record above the threshold together with the untrained network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub record: ExplorationRecord,
    pub network: Network,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub records: Vec<ExplorationRecord>,
    /// Snapshots of every record whose accuracy exceeds the threshold.
    pub candidates: Vec<Candidate>,
}

/// Ordering used for selection: `Greater` means `a` is preferred.
fn preference(a: &ExplorationRecord, b: &ExplorationRecord) -> Ordering {
    a.train_accuracy
        .total_cmp(&b.train_accuracy)
        .then(b.parameter_count.cmp(&a.parameter_count))
        .then(b.network_index.cmp(&a.network_index))
        .then(b.step_number.cmp(&a.step_number))
}

/// Highest accuracy, then fewest parameters, then lowest network index, then
/// earliest step.
pub fn selection_rule(candidates: &[Candidate]) -> Option<&Candidate> {
    candidates
        .iter()
        .max_by(|a, b| preference(&a.record, &b.record))
}

/// Hidden activations of every training row, kept so that a reduction step
/// only has to re-evaluate the output layer.
///
/// Reductions always hit the last non-empty hidden layer, and truncation keeps
/// the first neurons untouched, so every surviving hidden activation stays
/// valid. Between two layer removals (a phase) the output layer only loses
/// trailing input columns, so a single pass of prefix dot products yields the
/// output of every step in the phase.
struct ActivationCache {
    /// Per hidden layer: row-major `rows x stride` activations.
    layers: Vec<(Vec<f64>, usize)>,
}

impl ActivationCache {
    fn new(net: &Network, data: &Samples) -> Self {
        let hidden = net.topology().hidden().to_vec();
        let mut layers: Vec<(Vec<f64>, usize)> = hidden
            .iter()
            .map(|&w| (Vec::with_capacity(w * data.len()), w))
            .collect();
        let mut scratch = Activations::for_network(net);
        for i in 0..data.len() {
            net.forward_with(data.row(i), &mut scratch);
            for (h, (buf, _)) in layers.iter_mut().enumerate() {
                buf.extend_from_slice(&scratch.values[h + 1]);
            }
        }
        ActivationCache { layers }
    }

    /// Training accuracy after truncating the output layer's inputs to each
    /// of `widths`, bit-identical to a full forward pass of each truncation.
    fn phase_accuracies(&self, output: &Layer, data: &Samples, widths: &[usize]) -> Vec<f64> {
        let full = output.inputs();
        let n_out = output.outputs();
        let stride = full + 1;
        let margins = order_margins();
        let mut dots = vec![0.0; n_out * stride];
        let mut z = vec![0.0; n_out];
        let mut scratch = vec![0.0; n_out];
        let mut correct = vec![0usize; widths.len()];
        for i in 0..data.len() {
            let input = match self.layers.last() {
                Some((buf, s)) => &buf[i * s..i * s + full],
                None => data.row(i),
            };
            for (k, d) in dots.chunks_exact_mut(stride).enumerate() {
                prefix_dots(output.row(k), input, d);
            }
            for (count, &w) in correct.iter_mut().zip(widths) {
                for (k, zk) in z.iter_mut().enumerate() {
                    *zk = (output.biases()[k] + dots[k * stride + w])
                        .clamp(-PREACTIVATION_LIMIT, PREACTIVATION_LIMIT);
                }
                if predicted_class(&z, &margins, &mut scratch) == data.label(i) {
                    *count += 1;
                }
            }
        }
        correct
            .iter()
            .map(|&c| c as f64 / data.len() as f64)
            .collect()
    }

    fn drop_last_layer(&mut self) {
        self.layers.pop();
    }
}

/// `order_margins()[m]` bounds how close two clamped pre-activations with
/// magnitude at most `m` may be before their sigmoids could round to the
/// same value or swap order.
///
/// A computed sigmoid is within a few ulps of the true value, and the true
/// slope at `z` is at least `exp(-|z|) / 4`, so a gap of
/// `1e-12 * exp(m + 1)` leaves several orders of magnitude of slack.
fn order_margins() -> Vec<f64> {
    let top = PREACTIVATION_LIMIT as usize + 1;
    (0..=top).map(|m| 1e-12 * ((m + 1) as f64).exp()).collect()
}

/// The class a forward pass would predict from clamped pre-activations `z`.
///
/// The sigmoid is monotone, so the largest pre-activation wins unless a rival
/// lies within rounding distance; only then are the sigmoids evaluated and
/// compared exactly as [`Network::predict_class`] does.
fn predicted_class(z: &[f64], margins: &[f64], scratch: &mut [f64]) -> usize {
    let best = argmax(z);
    let top = z[best];
    let margin = margins[top.abs().ceil() as usize];
    let close = z
        .iter()
        .enumerate()
        .any(|(k, &v)| k != best && v >= top - margin);
    if !close {
        return best;
    }
    for (o, &v) in scratch.iter_mut().zip(z) {
        *o = sigmoid(v);
    }
    argmax(scratch)
}

/// Accuracies of one phase, indexed by how many reductions into the phase a
/// step is.
struct Phase {
    start_width: usize,
    accuracies: Vec<f64>,
}

impl Phase {
    fn begin(cache: &ActivationCache, net: &Network, data: &Samples, n_elim: usize) -> Self {
        let output = net.layers().last().expect("runnable networks have layers");
        let start_width = output.inputs();
        let widths: Vec<usize> = (1..=start_width).rev().step_by(n_elim).collect();
        Phase {
            start_width,
            accuracies: cache.phase_accuracies(output, data, &widths),
        }
    }

    fn accuracy(&self, net: &Network, n_elim: usize) -> f64 {
        let width = net
            .layers()
            .last()
            .expect("runnable networks have layers")
            .inputs();
        let offset = self.start_width - width;
        debug_assert_eq!(offset % n_elim, 0);
        self.accuracies[offset / n_elim]
    }
}

/// Explores cloud member `network_index`, keeping every candidate snapshot.
pub fn explore_one(
    topology_0: &Topology,
    config: &CloudConfig,
    network_index: usize,
    data: &Samples,
) -> Result<Exploration> {
    let mut candidates = Vec::new();
    let records = explore_with(topology_0, config, network_index, data, |record, net| {
        candidates.push(Candidate {
            record: record.clone(),
            network: net.clone(),
        })
    })?;
    Ok(Exploration {
        records,
        candidates,
    })
}

/// Runs one trajectory and hands every record above the threshold to `offer`.
fn explore_with(
    topology_0: &Topology,
    config: &CloudConfig,
    network_index: usize,
    data: &Samples,
    mut offer: impl FnMut(&ExplorationRecord, &Network),
) -> Result<Vec<ExplorationRecord>> {
    config.validate()?;
    if network_index >= config.cloud_size {
        return Err(Error::InvalidConfig(format!(
            "network index {network_index} outside a cloud of {}",
            config.cloud_size
        )));
    }
    if data.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    if data.n_features() != topology_0.inputs() || data.n_classes() != topology_0.outputs() {
        return Err(Error::TopologyMismatch {
            network: topology_0.widths().to_vec(),
            expected: vec![data.n_features(), data.n_classes()],
        });
    }
    let mut rng = Stream::substream(config.seed, Domain::Cloud, network_index as u64);
    let mut raw = topology_0.clone();
    let mut net = random_network(&effective_topology(&raw), &mut rng)?;
    let mut cache = ActivationCache::new(&net, data);
    let mut phase = Phase::begin(&cache, &net, data, config.n_elim);
    let mut records = Vec::new();
    let mut layer_removed_event = false;
    for step_number in 0.. {
        let record = ExplorationRecord {
            network_index,
            step_number,
            topology: net.topology().clone(),
            raw_topology: raw.clone(),
            parameter_count: parameter_count(&raw),
            train_accuracy: phase.accuracy(&net, config.n_elim),
            layer_removed_event,
        };
        if record.train_accuracy > config.threshold {
            offer(&record, &net);
        }
        records.push(record);
        match reduce_topology(&raw, config.n_elim)? {
            Reduction::Exhausted => break,
            Reduction::Step(step) => {
                net = reconstruct(&net, &step, &mut rng)?;
                layer_removed_event = step.removes_layer();
                if layer_removed_event {
                    cache.drop_last_layer();
                    phase = Phase::begin(&cache, &net, data, config.n_elim);
                }
                raw = step.after;
            }
        }
    }
    Ok(records)
}

/// Order in which cloud members are explored. Results never depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// One after another in index order on the calling thread.
    Serial,
    /// Across the current rayon pool.
    #[default]
    Parallel,
    /// Across the current rayon pool, submitted in a shuffled order.
    Permuted { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CloudTimings {
    pub exploration_secs: f64,
    pub refinement_secs: f64,
}

/// Outcome of a full cloud search.
///
/// Serialization covers everything except `timings`, so two runs with the
/// same inputs serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudResult {
    /// The selected untrained candidate.
    pub best: Option<Candidate>,
    /// The selected candidate after training.
    pub refined_network: Option<Network>,
    pub records: Vec<ExplorationRecord>,
    /// Gradient computations performed while exploring. Always zero.
    pub exploration_backward_passes: u64,
    pub refinement_backward_passes: u64,
    #[serde(skip)]
    pub timings: CloudTimings,
}

impl CloudResult {
    pub fn best_network(&self) -> Option<&Network> {
        self.best.as_ref().map(|c| &c.network)
    }

    pub fn best_accuracy_untrained(&self) -> Option<f64> {
        self.best.as_ref().map(|c| c.record.train_accuracy)
    }

    pub fn best_topology(&self) -> Option<&Topology> {
        self.best.as_ref().map(|c| &c.record.topology)
    }

    /// Canonical JSON of the deterministic content.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("cloud results always serialize")
    }
}

struct MemberOutcome {
    records: Vec<ExplorationRecord>,
    best: Option<Candidate>,
    backward_passes: u64,
}

fn explore_member(
    topology_0: &Topology,
    config: &CloudConfig,
    index: usize,
    data: &Samples,
) -> Result<MemberOutcome> {
    let before = backward_passes_on_this_thread();
    let mut best: Option<Candidate> = None;
    let records = explore_with(topology_0, config, index, data, |record, net| {
        let better = best
            .as_ref()
            .is_none_or(|b| preference(record, &b.record) == Ordering::Greater);
        if better {
            best = Some(Candidate {
                record: record.clone(),
                network: net.clone(),
            });
        }
    })?;
    Ok(MemberOutcome {
        records,
        best,
        backward_passes: backward_passes_on_this_thread() - before,
    })
}

pub fn run_cloud(
    topology_0: &Topology,
    config: &CloudConfig,
    data: &Samples,
) -> Result<CloudResult> {
    run_cloud_with(topology_0, config, data, Schedule::default())
}

/// Explores all members under `schedule`, selects, and refines.
pub fn run_cloud_with(
    topology_0: &Topology,
    config: &CloudConfig,
    data: &Samples,
    schedule: Schedule,
) -> Result<CloudResult> {
    let mut result = explore_cloud(topology_0, config, data, schedule)?;
    let start = Instant::now();
    let before = backward_passes_on_this_thread();
    if let Some(c) = &result.best {
        let mut rng = Stream::substream(config.seed, Domain::Refine, 0);
        result.refined_network = Some(train(&c.network, data, &config.train, &mut rng)?);
    }
    result.refinement_backward_passes = backward_passes_on_this_thread() - before;
    result.timings.refinement_secs = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Exploration and selection without refinement: `refined_network` is
/// always `None`. Useful when only the selection matters.
pub fn explore_cloud(
    topology_0: &Topology,
    config: &CloudConfig,
    data: &Samples,
    schedule: Schedule,
) -> Result<CloudResult> {
    config.validate()?;
    let start = Instant::now();
    let explore = |i: usize| explore_member(topology_0, config, i, data).map(|o| (i, o));
    let mut outcomes: Vec<(usize, MemberOutcome)> = match schedule {
        Schedule::Serial => (0..config.cloud_size).map(explore).collect::<Result<_>>()?,
        Schedule::Parallel => (0..config.cloud_size)
            .into_par_iter()
            .map(explore)
            .collect::<Result<_>>()?,
        Schedule::Permuted { seed } => {
            let mut order: Vec<usize> = (0..config.cloud_size).collect();
            Stream::substream(seed, Domain::Scratch, 0).shuffle(&mut order);
            order.into_par_iter().map(explore).collect::<Result<_>>()?
        }
    };
    outcomes.sort_by_key(|(i, _)| *i);

    let mut records = Vec::new();
    let mut best: Option<Candidate> = None;
    let mut exploration_backward_passes = 0;
    for (_, outcome) in outcomes {
        records.extend(outcome.records);
        exploration_backward_passes += outcome.backward_passes;
        if let Some(c) = outcome.best {
            if best
                .as_ref()
                .is_none_or(|b| preference(&c.record, &b.record) == Ordering::Greater)
            {
                best = Some(c);
            }
        }
    }
    Ok(CloudResult {
        best,
        refined_network: None,
        records,
        exploration_backward_passes,
        refinement_backward_passes: 0,
        timings: CloudTimings {
            exploration_secs: start.elapsed().as_secs_f64(),
            refinement_secs: 0.0,
        },
    })
}
