use serde::{Deserialize, Serialize};

use crate::data::Samples;
use crate::error::{Error, Result};
use crate::nn::Topology;
use crate::rng::Stream;

/// Pre-activations are clamped to this magnitude so a sigmoid output never
/// rounds to exactly 0 or 1 in `f64`.
pub const PREACTIVATION_LIMIT: f64 = 36.0;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-PREACTIVATION_LIMIT, PREACTIVATION_LIMIT);
    1.0 / (1.0 + (-z).exp())
}

/// Dot product with four interleaved accumulators. The summation order is
/// fixed, so results are identical on every platform.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Writes `dot(&a[..w], &b[..w])` into `out[w]` for every prefix length `w`
/// from 0 to `a.len()`, bit-identical to calling [`dot`] on each prefix but in
/// a single pass.
pub(crate) fn prefix_dots(a: &[f64], b: &[f64], out: &mut [f64]) {
    assert!(a.len() == b.len() && out.len() == a.len() + 1);
    let mut acc = [0.0f64; 4];
    let mut w = 0;
    loop {
        let base = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        let mut tail = 0.0;
        out[w] = base + tail;
        for j in 0..3 {
            if w + j >= a.len() {
                return;
            }
            tail += a[w + j] * b[w + j];
            out[w + j + 1] = base + tail;
        }
        if w + 3 >= a.len() {
            return;
        }
        for (k, s) in acc.iter_mut().enumerate() {
            *s += a[w + k] * b[w + k];
        }
        w += 4;
    }
}

/// One fully connected sigmoid layer. `weights` is row-major with shape
/// `outputs x inputs`; row `i` holds the incoming weights of neuron `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    pub fn new(outputs: usize, inputs: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if weights.len() != outputs * inputs {
            return Err(Error::DimensionMismatch {
                expected: outputs * inputs,
                actual: weights.len(),
            });
        }
        if biases.len() != outputs {
            return Err(Error::DimensionMismatch {
                expected: outputs,
                actual: biases.len(),
            });
        }
        Ok(Layer {
            inputs,
            outputs,
            weights,
            biases,
        })
    }

    pub fn zeros(outputs: usize, inputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; outputs * inputs],
            biases: vec![0.0; outputs],
        }
    }

    /// Draws weights row-major, then biases, each uniform in `[-1, 1)`.
    pub fn random(outputs: usize, inputs: usize, rng: &mut Stream) -> Self {
        let weights = (0..outputs * inputs)
            .map(|_| rng.symmetric_unit())
            .collect();
        let biases = (0..outputs).map(|_| rng.symmetric_unit()).collect();
        Layer {
            inputs,
            outputs,
            weights,
            biases,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.inputs..(i + 1) * self.inputs]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Sigmoid activations of this layer for `input`, written into `out`.
    #[inline]
    pub(crate) fn activate(&self, input: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = sigmoid(self.biases[i] + dot(self.row(i), input));
        }
    }
}

/// A fully connected feedforward network with sigmoid activations on every
/// layer, including the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    topology: Topology,
    layers: Vec<Layer>,
}

impl Network {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let first = layers.first().ok_or(Error::Empty("network layers"))?;
        let mut widths = vec![first.inputs];
        for layer in &layers {
            let prev = *widths.last().unwrap();
            if layer.inputs != prev {
                return Err(Error::DimensionMismatch {
                    expected: prev,
                    actual: layer.inputs,
                });
            }
            widths.push(layer.outputs);
        }
        let topology = Topology::new(widths)?;
        topology.require_runnable()?;
        Ok(Network { topology, layers })
    }

    pub fn zeros(topology: &Topology) -> Result<Self> {
        topology.require_runnable()?;
        let layers = topology
            .widths()
            .windows(2)
            .map(|w| Layer::zeros(w[1], w[0]))
            .collect();
        Ok(Network {
            topology: topology.clone(),
            layers,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut scratch = Activations::for_network(self);
        Ok(self.forward_with(x, &mut scratch).to_vec())
    }

    /// Argmax of the outputs; the lowest index wins ties.
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Fraction of `data` classified correctly. Forward passes only.
    pub fn accuracy(&self, data: &Samples) -> Result<f64> {
        self.check_input_width(data.n_features())?;
        if data.is_empty() {
            return Err(Error::Empty("samples"));
        }
        let mut scratch = Activations::for_network(self);
        let correct = (0..data.len())
            .filter(|&i| argmax(self.forward_with(data.row(i), &mut scratch)) == data.label(i))
            .count();
        Ok(correct as f64 / data.len() as f64)
    }

    /// Output vectors for every sample, row by row.
    pub fn outputs(&self, data: &Samples) -> Result<Vec<Vec<f64>>> {
        self.check_input_width(data.n_features())?;
        let mut scratch = Activations::for_network(self);
        Ok((0..data.len())
            .map(|i| self.forward_with(data.row(i), &mut scratch).to_vec())
            .collect())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        self.check_input_width(x.len())
    }

    fn check_input_width(&self, width: usize) -> Result<()> {
        if width != self.topology.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.topology.inputs(),
                actual: width,
            });
        }
        Ok(())
    }

    /// Unchecked forward pass reusing `scratch`; returns the output layer.
    pub(crate) fn forward_with<'s>(&self, x: &[f64], scratch: &'s mut Activations) -> &'s [f64] {
        scratch.values[0].copy_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (before, after) = scratch.values.split_at_mut(l + 1);
            layer.activate(&before[l], &mut after[0]);
        }
        scratch.values.last().unwrap()
    }
}

/// Per-layer activation buffers, index 0 holding the input.
#[derive(Debug, Clone)]
pub(crate) struct Activations {
    pub(crate) values: Vec<Vec<f64>>,
}

impl Activations {
    pub(crate) fn for_network(net: &Network) -> Self {
        Activations {
            values: net
                .topology
                .widths()
                .iter()
                .map(|&w| vec![0.0; w])
                .collect(),
        }
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A network with every weight and bias drawn uniformly from `[-1, 1)`.
///
/// Draw order: layer by layer from the input side; within a layer the weight
/// matrix row-major, then the bias vector.
pub fn random_network(topology: &Topology, rng: &mut Stream) -> Result<Network> {
    topology.require_runnable()?;
    let layers = topology
        .widths()
        .windows(2)
        .map(|w| Layer::random(w[1], w[0], rng))
        .collect();
    Ok(Network {
        topology: topology.clone(),
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Domain;

    fn topo(w: &[usize]) -> Topology {
        Topology::new(w.to_vec()).unwrap()
    }

    #[test]
    fn prefix_dots_match_dot_on_every_prefix() {
        let mut rng = Stream::new(17);
        for len in 0..40 {
            let mut out = vec![f64::NAN; len + 1];
            let a: Vec<f64> = (0..len).map(|_| 3.0 * rng.symmetric_unit()).collect();
            let b: Vec<f64> = (0..len).map(|_| 3.0 * rng.symmetric_unit()).collect();
            prefix_dots(&a, &b, &mut out);
            for w in 0..=len {
                assert_eq!(
                    out[w].to_bits(),
                    dot(&a[..w], &b[..w]).to_bits(),
                    "len {len} prefix {w}"
                );
            }
        }
    }

    #[test]
    fn random_network_draws_in_range() {
        let mut rng = Stream::new(3);
        let net = random_network(&topo(&[2, 1]), &mut rng).unwrap();
        assert_eq!(net.layers()[0].weights().len(), 2);
        assert_eq!(net.layers()[0].biases().len(), 1);
        for &v in net.layers()[0]
            .weights()
            .iter()
            .chain(net.layers()[0].biases())
        {
            assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn random_network_is_deterministic() {
        let t = topo(&[5, 4, 3]);
        let a = random_network(&t, &mut Stream::substream(11, Domain::Cloud, 2)).unwrap();
        let b = random_network(&t, &mut Stream::substream(11, Domain::Cloud, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_network_rejects_zero_hidden_width() {
        let t = topo(&[4, 3, 0, 2]);
        assert!(matches!(
            random_network(&t, &mut Stream::new(0)),
            Err(Error::InvalidTopology { .. })
        ));
    }

    #[test]
    fn draw_order_is_weights_then_biases_per_layer() {
        let t = topo(&[2, 2, 1]);
        let net = random_network(&t, &mut Stream::new(42)).unwrap();
        let mut rng = Stream::new(42);
        let draws: Vec<f64> = (0..9).map(|_| rng.symmetric_unit()).collect();
        assert_eq!(net.layers()[0].weights(), &draws[0..4]);
        assert_eq!(net.layers()[0].biases(), &draws[4..6]);
        assert_eq!(net.layers()[1].weights(), &draws[6..8]);
        assert_eq!(net.layers()[1].biases(), &draws[8..9]);
    }

    #[test]
    fn zero_network_outputs_one_half() {
        let net = Network::zeros(&topo(&[3, 4, 2])).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 7.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(net.predict_class(&[0.3, 0.1, 0.2]).unwrap(), 0);
    }

    #[test]
    fn single_layer_closed_form() {
        let (w, b, x) = (0.7_f64, -0.2_f64, 1.5_f64);
        let layer = Layer::new(1, 1, vec![w], vec![b]).unwrap();
        let net = Network::from_layers(vec![layer]).unwrap();
        let expected = 1.0 / (1.0 + (-(w * x + b)).exp());
        assert_eq!(net.forward(&[x]).unwrap(), vec![expected]);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.9, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = Network::zeros(&topo(&[3, 2])).unwrap();
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
    }

    #[test]
    fn outputs_stay_strictly_inside_unit_interval() {
        let layer = Layer::new(2, 1, vec![1e6, -1e6], vec![0.0, 0.0]).unwrap();
        let net = Network::from_layers(vec![layer]).unwrap();
        let out = net.forward(&[1.0]).unwrap();
        assert!(out.iter().all(|&o| o > 0.0 && o < 1.0), "{out:?}");
    }

    #[test]
    fn from_layers_checks_chaining() {
        let a = Layer::zeros(3, 2);
        let b = Layer::zeros(1, 4);
        assert!(Network::from_layers(vec![a, b]).is_err());
    }
}
