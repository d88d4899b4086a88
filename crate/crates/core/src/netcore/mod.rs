//! Small LSTM engine: normalizers, forward pass, backpropagation through time
//! for parameters and inputs, minibatch training and text checkpoints.

pub mod checkpoint;
mod lstm;
mod normalizer;
mod train;

pub use lstm::{clip_norm, Grads, NetworkModel, NetworkSpec, Tape};
pub use normalizer::{Normalizer, DEGENERATE_EPS};
pub use train::{evaluate_loss, train, Dataset, Optimizer, TrainConfig, TrainHistory};
