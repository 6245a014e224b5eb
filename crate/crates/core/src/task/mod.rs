//! The classifier whose hidden-layer widths are being searched.
//!
//! An [`Architecture`] is turned into a dense classifier, trained `K` times
//! with independent seeds, and summarised as a [`TrialResult`] holding the
//! per-trial test accuracies.

mod architecture;
mod data;
mod mnist;
mod trials;

pub use architecture::{Architecture, MAX_WIDTH};
pub use data::{make_synthetic, LabeledDataset, SyntheticSpec};
pub use mnist::{load_mnist_idx, MnistPaths};
pub use trials::{
    build_classifier_spec, collect_grid, grid_architectures, run_trials, EvalBudget, Evaluator,
    RealTrainer, TrialResult, DEFAULT_DROPOUT,
};
