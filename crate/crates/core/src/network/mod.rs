//! Sinusoidal multilayer perceptron: configuration, parameters, initialization, forward and
//! reverse-mode passes, and binary checkpoints.

mod autodiff;
mod checkpoint;
mod config;
mod params;

pub use autodiff::{
    backward, backward_tape, backward_tape_into, forward, forward_tape, forward_trace, jacobian_row,
    ActivationTrace, LayerActivations, Tape,
};
pub use checkpoint::{read_checkpoint, write_checkpoint, decode_checkpoint, encode_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{FirstLayerInit, NetworkConfig};
pub use params::{
    apply_winner_perturbation, hidden_weight_bound, init_siren_uniform, predicted_preactivation_std, Layer,
    Parameters,
};
