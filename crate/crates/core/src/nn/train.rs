use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::data::Samples;
use crate::error::{Error, Result};
use crate::nn::network::{Activations, Layer, Network};
use crate::rng::Stream;

/// Rows at or above which the automatic batch size switches from full-batch
/// to [`AUTO_MINIBATCH`].
pub const AUTO_FULL_BATCH_LIMIT: usize = 1000;
pub const AUTO_MINIBATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `0.5 * sum_k (o_k - t_k)^2` per sample.
    #[default]
    SquaredError,
    /// Per-output Bernoulli cross-entropy.
    CrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// `None` picks full-batch below [`AUTO_FULL_BATCH_LIMIT`] rows and
    /// [`AUTO_MINIBATCH`] otherwise.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1000,
            learning_rate: 0.1,
            batch_size: None,
            loss: Loss::SquaredError,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }

    pub fn effective_batch_size(&self, rows: usize) -> usize {
        match self.batch_size {
            Some(b) => b.min(rows).max(1),
            None if rows < AUTO_FULL_BATCH_LIMIT => rows.max(1),
            None => AUTO_MINIBATCH,
        }
    }
}

thread_local! {
    static BACKWARD_PASSES: Cell<u64> = const { Cell::new(0) };
}

/// Per-sample backpropagation passes executed on the calling thread so far.
///
/// Work that runs entirely on one thread can attribute gradient computations
/// to itself by reading this before and after.
pub fn backward_passes_on_this_thread() -> u64 {
    BACKWARD_PASSES.with(Cell::get)
}

/// Gradients with the same shapes as a network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net
                .layers()
                .iter()
                .map(|l| vec![0.0; l.weights().len()])
                .collect(),
            biases: net
                .layers()
                .iter()
                .map(|l| vec![0.0; l.biases().len()])
                .collect(),
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().for_each(|w| w.fill(0.0));
        self.biases.iter_mut().for_each(|b| b.fill(0.0));
    }

    fn scale(&mut self, k: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            v.iter_mut().for_each(|x| *x *= k);
        }
    }
}

fn sample_loss(output: &[f64], label: usize, loss: Loss) -> f64 {
    output
        .iter()
        .enumerate()
        .map(|(k, &o)| {
            let t = if k == label { 1.0 } else { 0.0 };
            match loss {
                Loss::SquaredError => 0.5 * (o - t) * (o - t),
                Loss::CrossEntropy => -(t * o.ln() + (1.0 - t) * (1.0 - o).ln()),
            }
        })
        .sum()
}

/// Reusable buffers for one backpropagation pass.
struct Backprop {
    acts: Activations,
    deltas: Vec<Vec<f64>>,
}

impl Backprop {
    fn new(net: &Network) -> Self {
        Backprop {
            acts: Activations::for_network(net),
            deltas: net
                .layers()
                .iter()
                .map(|l| vec![0.0; l.outputs()])
                .collect(),
        }
    }

    /// Adds this sample's gradient to `grads` and returns its loss.
    fn accumulate(
        &mut self,
        net: &Network,
        x: &[f64],
        label: usize,
        loss: Loss,
        grads: &mut Gradients,
    ) -> f64 {
        BACKWARD_PASSES.with(|c| c.set(c.get() + 1));
        net.forward_with(x, &mut self.acts);
        let layers = net.layers();
        let last = layers.len() - 1;
        let output = &self.acts.values[last + 1];
        let value = sample_loss(output, label, loss);

        for (k, d) in self.deltas[last].iter_mut().enumerate() {
            let o = output[k];
            let t = if k == label { 1.0 } else { 0.0 };
            *d = match loss {
                Loss::SquaredError => (o - t) * o * (1.0 - o),
                Loss::CrossEntropy => o - t,
            };
        }

        for l in (0..=last).rev() {
            let layer = &layers[l];
            let input = &self.acts.values[l];
            let (lower, upper) = self.deltas.split_at_mut(l);
            let delta = &upper[0];
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            let n_in = layer.inputs();
            for (i, &d) in delta.iter().enumerate() {
                gb[i] += d;
                let row = &mut gw[i * n_in..(i + 1) * n_in];
                for (g, &a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let prev = &mut lower[l - 1];
                prev.fill(0.0);
                for (i, &d) in delta.iter().enumerate() {
                    for (p, &w) in prev.iter_mut().zip(layer.row(i)) {
                        *p += w * d;
                    }
                }
                for (p, &a) in prev.iter_mut().zip(input) {
                    *p *= a * (1.0 - a);
                }
            }
        }
        value
    }
}

fn check_data(net: &Network, data: &Samples) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if data.n_features() != net.topology().inputs() {
        return Err(Error::DimensionMismatch {
            expected: net.topology().inputs(),
            actual: data.n_features(),
        });
    }
    let outputs = net.topology().outputs();
    if let Some(&label) = data.labels().iter().find(|&&l| l >= outputs) {
        return Err(Error::LabelOutOfRange {
            label,
            n_classes: outputs,
        });
    }
    Ok(())
}

/// Mean per-sample loss over `data` against one-hot targets.
pub fn mean_loss(net: &Network, data: &Samples, loss: Loss) -> Result<f64> {
    check_data(net, data)?;
    let mut acts = Activations::for_network(net);
    let total: f64 = (0..data.len())
        .map(|i| {
            sample_loss(
                net.forward_with(data.row(i), &mut acts),
                data.label(i),
                loss,
            )
        })
        .sum();
    Ok(total / data.len() as f64)
}

/// Mean loss and its gradient with respect to every parameter.
pub fn loss_gradients(net: &Network, data: &Samples, loss: Loss) -> Result<(f64, Gradients)> {
    check_data(net, data)?;
    let mut grads = Gradients::zeros_like(net);
    let mut bp = Backprop::new(net);
    let total: f64 = (0..data.len())
        .map(|i| bp.accumulate(net, data.row(i), data.label(i), loss, &mut grads))
        .sum();
    let n = data.len() as f64;
    grads.scale(1.0 / n);
    Ok((total / n, grads))
}

fn apply(layers: &mut [Layer], grads: &Gradients, step: f64) {
    for (l, layer) in layers.iter_mut().enumerate() {
        for (w, g) in layer.weights_mut().iter_mut().zip(&grads.weights[l]) {
            *w -= step * g;
        }
        for (b, g) in layer.biases_mut().iter_mut().zip(&grads.biases[l]) {
            *b -= step * g;
        }
    }
}

/// Mini-batch gradient descent for `cfg.epochs` epochs. Sample order is
/// reshuffled from `rng` at the start of every epoch.
pub fn train(
    net: &Network,
    data: &Samples,
    cfg: &TrainConfig,
    rng: &mut Stream,
) -> Result<Network> {
    let mut net = net.clone();
    train_in_place(&mut net, data, cfg, rng)?;
    Ok(net)
}

pub fn train_in_place(
    net: &mut Network,
    data: &Samples,
    cfg: &TrainConfig,
    rng: &mut Stream,
) -> Result<()> {
    cfg.validate()?;
    check_data(net, data)?;
    let batch = cfg.effective_batch_size(data.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grads = Gradients::zeros_like(net);
    let mut bp = Backprop::new(net);
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            grads.clear();
            for &i in chunk {
                bp.accumulate(net, data.row(i), data.label(i), cfg.loss, &mut grads);
            }
            apply(
                net.layers_mut(),
                &grads,
                cfg.learning_rate / chunk.len() as f64,
            );
        }
    }
    Ok(())
}
