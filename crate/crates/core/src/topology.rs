//! Topology reduction and structure-preserving reconstruction.
//!
//! Reduction always shrinks the highest-indexed hidden layer that still has
//! neurons, never touching the input or output width. Reconstruction keeps
//! the top-left block of every affected weight matrix: the first `n'` rows
//! (and biases) of the reduced layer's incoming matrix and the first `n'`
//! columns of its outgoing matrix. When a hidden layer empties, it is
//! dropped and its neighbours are joined by a freshly drawn `U(-1, 1)`
//! matrix; the downstream layer keeps its biases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Layer, Network, Topology};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionStep {
    /// Index into the width vector of the hidden layer that shrank.
    pub layer_index: usize,
    pub removed: usize,
    pub before: Topology,
    pub after: Topology,
}

impl ReductionStep {
    /// Removes up to `removed` neurons from hidden layer `layer_index`.
    pub fn new(before: &Topology, layer_index: usize, removed: usize) -> Result<Self> {
        let widths = before.widths();
        if layer_index == 0 || layer_index >= widths.len() - 1 {
            return Err(Error::InvalidTopology {
                widths: widths.to_vec(),
                reason: format!("layer {layer_index} is not a hidden layer"),
            });
        }
        if widths[layer_index] == 0 {
            return Err(Error::InvalidTopology {
                widths: widths.to_vec(),
                reason: format!("hidden layer {layer_index} is already empty"),
            });
        }
        let mut after = widths.to_vec();
        after[layer_index] = after[layer_index].saturating_sub(removed);
        Ok(ReductionStep {
            layer_index,
            removed,
            before: before.clone(),
            after: Topology::new(after)?,
        })
    }

    /// True when this step empties its layer.
    pub fn removes_layer(&self) -> bool {
        self.after.widths()[self.layer_index] == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reduction {
    Step(ReductionStep),
    /// Every hidden layer is already empty.
    Exhausted,
}

pub fn reduce_topology(t: &Topology, n_elim: usize) -> Result<Reduction> {
    if t.hidden().is_empty() {
        return Err(Error::InvalidTopology {
            widths: t.widths().to_vec(),
            reason: "no hidden layers to reduce".into(),
        });
    }
    if n_elim == 0 {
        return Err(Error::InvalidConfig("n_elim must be positive".into()));
    }
    match (1..t.widths().len() - 1).rev().find(|&l| t.widths()[l] > 0) {
        Some(l) => Ok(Reduction::Step(ReductionStep::new(t, l, n_elim)?)),
        None => Ok(Reduction::Exhausted),
    }
}

/// `t` with its empty hidden layers deleted.
pub fn effective_topology(t: &Topology) -> Topology {
    let w = t.widths();
    let mut out = vec![w[0]];
    out.extend(t.hidden().iter().copied().filter(|&h| h > 0));
    out.push(w[w.len() - 1]);
    Topology::new(out).expect("input and output widths are preserved")
}

/// Weights plus biases of the effective topology.
pub fn parameter_count(t: &Topology) -> usize {
    effective_topology(t)
        .widths()
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum()
}

pub fn reduction_percent(t0: &Topology, t: &Topology) -> f64 {
    let base = parameter_count(t0) as f64;
    100.0 * (1.0 - parameter_count(t) as f64 / base)
}

/// Keeps the listed neurons of every hidden layer of `net`.
///
/// `keep[h]` holds sorted, distinct indices into hidden layer `h + 1`. Kept
/// weights are copied exactly. An empty keep set deletes its layer; each run
/// of deleted layers is bridged by a fresh `U(-1, 1)` matrix drawn row-major
/// from `rng`, bridges in input-to-output order, while the layer after the
/// gap keeps its (selected) biases. No draws happen when nothing is deleted.
pub fn select_neurons(net: &Network, keep: &[Vec<usize>], rng: &mut Stream) -> Result<Network> {
    let widths = net.topology().widths();
    let hidden = widths.len() - 2;
    if keep.len() != hidden {
        return Err(Error::DimensionMismatch {
            expected: hidden,
            actual: keep.len(),
        });
    }
    for (h, k) in keep.iter().enumerate() {
        let n = widths[h + 1];
        if k.windows(2).any(|w| w[0] >= w[1]) || k.iter().any(|&i| i >= n) {
            return Err(Error::InvalidConfig(format!(
                "keep set for hidden layer {} must be sorted indices below {n}",
                h + 1
            )));
        }
    }
    // Surviving node layers as (old index, kept neurons).
    let all = |n: usize| (0..n).collect::<Vec<_>>();
    let mut nodes: Vec<(usize, Vec<usize>)> = vec![(0, all(widths[0]))];
    for (h, k) in keep.iter().enumerate() {
        if !k.is_empty() {
            nodes.push((h + 1, k.clone()));
        }
    }
    nodes.push((widths.len() - 1, all(widths[widths.len() - 1])));

    let old = net.layers();
    let mut layers = Vec::with_capacity(nodes.len() - 1);
    for pair in nodes.windows(2) {
        let (src, ref cols) = pair[0];
        let (dst, ref rows) = pair[1];
        let source_layer = &old[dst - 1];
        let biases: Vec<f64> = rows.iter().map(|&r| source_layer.biases()[r]).collect();
        let weights: Vec<f64> = if dst == src + 1 {
            rows.iter()
                .flat_map(|&r| cols.iter().map(move |&c| source_layer.weight(r, c)))
                .collect()
        } else {
            (0..rows.len() * cols.len())
                .map(|_| rng.symmetric_unit())
                .collect()
        };
        layers.push(Layer::new(rows.len(), cols.len(), weights, biases)?);
    }
    Network::from_layers(layers)
}

/// Applies `step` to `net`, whose topology must be `effective_topology(step.before)`.
pub fn reconstruct(net: &Network, step: &ReductionStep, rng: &mut Stream) -> Result<Network> {
    let expected = effective_topology(&step.before);
    if net.topology() != &expected {
        return Err(Error::TopologyMismatch {
            network: net.topology().widths().to_vec(),
            expected: expected.widths().to_vec(),
        });
    }
    let before = step.before.widths();
    // Position of the reduced layer among the network's hidden layers.
    let target = before[1..step.layer_index]
        .iter()
        .filter(|&&w| w > 0)
        .count();
    let kept_width = step.after.widths()[step.layer_index];
    let keep: Vec<Vec<usize>> = net
        .topology()
        .hidden()
        .iter()
        .enumerate()
        .map(|(h, &n)| {
            if h == target {
                (0..kept_width).collect()
            } else {
                (0..n).collect()
            }
        })
        .collect();
    if kept_width == before[step.layer_index] {
        return Ok(net.clone());
    }
    select_neurons(net, &keep, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::random_network;

    fn t(w: &[usize]) -> Topology {
        Topology::new(w.to_vec()).unwrap()
    }

    fn step_after(from: &[usize], n: usize) -> Option<Vec<usize>> {
        match reduce_topology(&t(from), n).unwrap() {
            Reduction::Step(s) => Some(s.after.widths().to_vec()),
            Reduction::Exhausted => None,
        }
    }

    #[test]
    fn reduction_policy_examples() {
        assert_eq!(step_after(&[30, 10, 5, 2], 1), Some(vec![30, 10, 4, 2]));
        assert_eq!(step_after(&[30, 10, 0, 2], 3), Some(vec![30, 7, 0, 2]));
        assert_eq!(step_after(&[30, 0, 0, 2], 1), None);
        assert_eq!(step_after(&[30, 2, 2], 5), Some(vec![30, 0, 2]));
    }

    #[test]
    fn reduction_needs_a_hidden_layer() {
        assert!(reduce_topology(&t(&[4, 2]), 1).is_err());
        assert!(reduce_topology(&t(&[4, 3, 2]), 0).is_err());
    }

    #[test]
    fn effective_topology_examples() {
        assert_eq!(effective_topology(&t(&[30, 10, 0, 2])), t(&[30, 10, 2]));
        assert_eq!(effective_topology(&t(&[30, 0, 0, 2])), t(&[30, 2]));
        assert_eq!(effective_topology(&t(&[30, 10, 5, 2])), t(&[30, 10, 5, 2]));
    }

    #[test]
    fn parameter_count_examples() {
        assert_eq!(parameter_count(&t(&[60, 30, 2])), 1892);
        assert_eq!(parameter_count(&t(&[60, 3, 2])), 191);
        assert_eq!(parameter_count(&t(&[4, 2])), 10);
        assert_eq!(parameter_count(&t(&[60, 0, 3, 2])), 191);
    }

    #[test]
    fn reduction_percent_examples() {
        let r = reduction_percent(&t(&[60, 30, 2]), &t(&[60, 3, 2]));
        assert!((r - 100.0 * (1.0 - 191.0 / 1892.0)).abs() < 1e-12);
        assert!((r - 89.9).abs() < 0.05);
        assert_eq!(reduction_percent(&t(&[60, 30, 2]), &t(&[60, 30, 2])), 0.0);
        assert_eq!(reduction_percent(&t(&[4, 2]), &t(&[4, 2])), 0.0);
    }

    #[test]
    fn truncation_keeps_top_left_blocks() {
        let net = random_network(&t(&[4, 3, 2]), &mut Stream::new(5)).unwrap();
        let step = ReductionStep::new(&t(&[4, 3, 2]), 1, 1).unwrap();
        let mut rng = Stream::new(0);
        let out = reconstruct(&net, &step, &mut rng).unwrap();
        assert_eq!(out.topology(), &t(&[4, 2, 2]));
        let (w1, w2) = (&net.layers()[0], &net.layers()[1]);
        assert_eq!(out.layers()[0].weights(), &w1.weights()[..8]);
        assert_eq!(out.layers()[0].biases(), &w1.biases()[..2]);
        let cols: Vec<f64> = (0..2)
            .flat_map(|r| (0..2).map(move |c| w2.weight(r, c)))
            .collect();
        assert_eq!(out.layers()[1].weights(), &cols[..]);
        assert_eq!(out.layers()[1].biases(), w2.biases());
        // No fresh draws were needed.
        assert_eq!(rng.next_u64(), Stream::new(0).next_u64());
    }

    #[test]
    fn identity_step_is_bit_identical() {
        let net = random_network(&t(&[4, 3, 2]), &mut Stream::new(5)).unwrap();
        let step = ReductionStep::new(&t(&[4, 3, 2]), 1, 0).unwrap();
        assert_eq!(reconstruct(&net, &step, &mut Stream::new(1)).unwrap(), net);
    }

    #[test]
    fn emptied_layer_is_bridged_from_the_stream() {
        let net = random_network(&t(&[4, 1, 2]), &mut Stream::new(5)).unwrap();
        let step = ReductionStep::new(&t(&[4, 1, 2]), 1, 1).unwrap();
        assert!(step.removes_layer());
        let mut rng = Stream::new(77);
        let out = reconstruct(&net, &step, &mut rng).unwrap();
        assert_eq!(out.topology(), &t(&[4, 2]));
        let mut replay = Stream::new(77);
        let fresh: Vec<f64> = (0..8).map(|_| replay.symmetric_unit()).collect();
        assert_eq!(out.layers()[0].weights(), &fresh[..]);
        assert_eq!(out.layers()[0].biases(), net.layers()[1].biases());
        assert_eq!(rng.next_u64(), replay.next_u64());
    }

    #[test]
    fn reduction_skips_zero_layers_when_mapping_to_network_layers() {
        // Raw [5, 3, 0, 2] runs as [5, 3, 2]; shrinking raw layer 1 touches network layer 0.
        let raw = t(&[5, 3, 0, 2]);
        let net = random_network(&effective_topology(&raw), &mut Stream::new(9)).unwrap();
        let Reduction::Step(step) = reduce_topology(&raw, 1).unwrap() else {
            panic!()
        };
        assert_eq!(step.layer_index, 1);
        let out = reconstruct(&net, &step, &mut Stream::new(0)).unwrap();
        assert_eq!(out.topology(), &t(&[5, 2, 2]));
        assert_eq!(out.layers()[0].weights(), &net.layers()[0].weights()[..10]);
    }

    #[test]
    fn reconstruct_rejects_mismatched_network() {
        let net = random_network(&t(&[4, 3, 2]), &mut Stream::new(5)).unwrap();
        let step = ReductionStep::new(&t(&[4, 5, 2]), 1, 1).unwrap();
        assert!(matches!(
            reconstruct(&net, &step, &mut Stream::new(0)),
            Err(Error::TopologyMismatch { .. })
        ));
    }

    #[test]
    fn sequence_terminates_after_expected_steps() {
        let mut cur = t(&[7, 4, 6, 2]);
        let mut steps = 0;
        while let Reduction::Step(s) = reduce_topology(&cur, 2).unwrap() {
            assert_eq!(s.before.widths()[0], s.after.widths()[0]);
            assert_eq!(s.before.outputs(), s.after.outputs());
            assert!(parameter_count(&s.after) < parameter_count(&s.before));
            cur = s.after;
            steps += 1;
        }
        assert_eq!(steps, (4 + 6) / 2);
    }

    #[test]
    fn deleting_consecutive_layers_draws_one_bridge() {
        let net = random_network(&t(&[3, 2, 2, 2, 1]), &mut Stream::new(1)).unwrap();
        let out = select_neurons(&net, &[vec![0, 1], vec![], vec![]], &mut Stream::new(2)).unwrap();
        assert_eq!(out.topology(), &t(&[3, 2, 1]));
        assert_eq!(out.layers()[0], net.layers()[0]);
        assert_eq!(out.layers()[1].biases(), net.layers()[3].biases());
    }
}
