//! Feedforward sigmoid networks: construction, inference and SGD training.

mod io;
mod network;
mod topology;
mod train;

pub use io::{read_network, write_network, NETWORK_FORMAT_VERSION};
pub use network::{argmax, random_network, sigmoid, Layer, Network, PREACTIVATION_LIMIT};
pub use topology::Topology;
pub use train::{
    backward_passes_on_this_thread, loss_gradients, mean_loss, train, train_in_place, Gradients,
    Loss, TrainConfig, AUTO_FULL_BATCH_LIMIT, AUTO_MINIBATCH,
};

pub(crate) use network::{prefix_dots, Activations};
