//! Minimal dense neural-network engine.
//!
//! Everything is `f64`, row-major, single-threaded and seedable: a given
//! `(spec, data, settings)` always produces bit-identical parameters.
//! Used both for the classifier being tuned and for the ASNN regressor.

mod adam;
mod matrix;
mod network;
mod train;

pub use adam::{adam_update, AdamConfig, AdamState};
pub use matrix::Matrix;
pub use network::{
    forward, init_params, loss, loss_and_grads, softmax_rows, Activation, DenseParams,
    ForwardCache, Mode, NetworkParams, NetworkSpec, OutputHead, Targets,
};
pub use train::{
    evaluate_accuracy, predict_classes, train, train_from, TrainOutcome, TrainSettings,
};
