//! Architecture-suggesting neural network (ASNN).
//!
//! The ASNN is an inverse regression model: it learns to map the vector of
//! repeated-trial test accuracies of a classifier back onto the hidden-layer
//! widths that produced them. Querying it with a perfect-accuracy vector
//! `(100, ..., 100)` yields a suggested architecture, which is evaluated,
//! appended to the training set, and the cycle repeats.
//!
//! Module map:
//!
//! - [`nn`]: dense network engine (forward/backward, dropout, Adam, training).
//! - [`task`]: the classifier being tuned, datasets, and trial evaluation.
//! - [`dataset`]: ASNN training records, permutation augmentation, scaling.
//! - [`model`]: the ASNN regressor, query, quantization and checkpoints.
//! - [`search`]: the suggest/evaluate/relearn loop, tabular oracle, random baseline.
//! - [`tables`], [`io`], [`config`]: embedded reference grids, file formats, run configuration.
//! - [`app`]: runs one configured CLI mode end to end.

pub mod app;
pub mod config;
pub mod dataset;
mod error;
pub mod io;
pub mod model;
pub mod nn;
pub mod rng;
pub mod search;
pub mod tables;
pub mod task;

pub use error::{Error, Result};
