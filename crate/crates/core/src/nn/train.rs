use rand::seq::SliceRandom;

use super::{
    forward, init_params, loss_and_grads, AdamConfig, AdamState, Matrix, Mode, NetworkParams,
    NetworkSpec, OutputHead, Targets,
};
use crate::rng::{derive_seed, rng_from_seed, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Mean training-mode loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Initialises a network from `settings.seed` and trains it with Adam for
/// `epochs * ceil(n / batch_size)` steps.
///
/// Initialisation, per-epoch shuffling and dropout masks each use their own
/// stream derived from `settings.seed`.
pub fn train(
    spec: &NetworkSpec,
    inputs: &Matrix,
    targets: Targets<'_>,
    settings: &TrainSettings,
    adam: AdamConfig,
) -> Result<TrainOutcome> {
    if settings.epochs == 0 || settings.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "epochs and batch_size must be >= 1".into(),
        ));
    }
    let params = init_params(spec, derive_seed(settings.seed, streams::INIT))?;
    train_from(spec, params, inputs, targets, settings, adam)
}

/// Like [`train`], but starting from the given parameters instead of a fresh init.
pub fn train_from(
    spec: &NetworkSpec,
    mut params: NetworkParams,
    inputs: &Matrix,
    targets: Targets<'_>,
    settings: &TrainSettings,
    adam: AdamConfig,
) -> Result<TrainOutcome> {
    if settings.epochs == 0 || settings.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "epochs and batch_size must be >= 1".into(),
        ));
    }
    let n = inputs.rows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut state = AdamState::new(&params, adam)?;
    let mut shuffle_rng = rng_from_seed(derive_seed(settings.seed, streams::SHUFFLE));
    let dropout_base = derive_seed(settings.seed, streams::DROPOUT);

    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(settings.epochs);
    for _ in 0..settings.epochs {
        if settings.shuffle_each_epoch {
            order.shuffle(&mut shuffle_rng);
        }
        let mut total = 0.0;
        for idx in order.chunks(settings.batch_size) {
            let batch = inputs.select_rows(idx);
            let mode = Mode::Train {
                seed: derive_seed(dropout_base, state.step),
            };
            let (loss, grads) = match targets {
                Targets::Classes(labels) => {
                    let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                    loss_and_grads(&params, spec, &batch, Targets::Classes(&y), mode)?
                }
                Targets::Values(values) => {
                    let y = values.select_rows(idx);
                    loss_and_grads(&params, spec, &batch, Targets::Values(&y), mode)?
                }
            };
            state.step(&mut params, &grads)?;
            total += loss * idx.len() as f64;
        }
        epoch_losses.push(total / n as f64);
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
    })
}

const EVAL_CHUNK: usize = 1024;

/// Argmax class per row (ties go to the lowest index), evaluated in chunks.
pub fn predict_classes(
    params: &NetworkParams,
    spec: &NetworkSpec,
    inputs: &Matrix,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(inputs.rows());
    let idx: Vec<usize> = (0..inputs.rows()).collect();
    for chunk in idx.chunks(EVAL_CHUNK) {
        let (logits, _) = forward(params, spec, &inputs.select_rows(chunk), Mode::Eval)?;
        for r in 0..logits.rows() {
            let row = logits.row(r);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            out.push(best);
        }
    }
    Ok(out)
}

/// Fraction of samples whose argmax prediction equals the label.
pub fn evaluate_accuracy(
    params: &NetworkParams,
    spec: &NetworkSpec,
    inputs: &Matrix,
    labels: &[usize],
) -> Result<f64> {
    if spec.output_head != OutputHead::SoftmaxCrossEntropy {
        return Err(Error::InvalidArgument(
            "accuracy needs a classification head".into(),
        ));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if labels.len() != inputs.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} samples",
            labels.len(),
            inputs.rows()
        )));
    }
    let preds = predict_classes(params, spec, inputs)?;
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / labels.len() as f64)
}
