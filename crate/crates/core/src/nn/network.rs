use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputHead {
    /// Raw logits out; loss is softmax cross-entropy against class indices.
    SoftmaxCrossEntropy,
    /// Linear outputs; loss is the mean of squared errors over all entries.
    MeanSquaredError,
}

/// Shape of a fully connected network: `input -> [Dense(w) -> act -> Dropout(p)]* -> Dense(out)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub hidden_activation: Activation,
    pub dropout_rates: Vec<f64>,
    pub output_dim: usize,
    pub output_head: OutputHead,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidSpec(
                "input and output dims must be >= 1".into(),
            ));
        }
        if self.hidden_widths.is_empty() {
            return Err(Error::InvalidSpec(
                "at least one hidden layer required".into(),
            ));
        }
        if let Some(i) = self.hidden_widths.iter().position(|&w| w == 0) {
            return Err(Error::InvalidSpec(format!("hidden layer {i} has width 0")));
        }
        if self.dropout_rates.len() != self.hidden_widths.len() {
            return Err(Error::InvalidSpec(format!(
                "{} dropout rates for {} hidden layers",
                self.dropout_rates.len(),
                self.hidden_widths.len()
            )));
        }
        if let Some(p) = self.dropout_rates.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::InvalidSpec(format!(
                "dropout rate {p} outside [0, 1)"
            )));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` for every dense layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut fan_in = self.input_dim;
        for &w in &self.hidden_widths {
            dims.push((fan_in, w));
            fan_in = w;
        }
        dims.push((fan_in, self.output_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// Weights (`fan_in x fan_out`) and bias of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<DenseParams>,
}

impl NetworkParams {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let layers = spec
            .layer_dims()
            .into_iter()
            .map(|(i, o)| DenseParams {
                weights: Matrix::zeros(i, o),
                bias: vec![0.0; o],
            })
            .collect();
        Self { layers }
    }

    /// Parameter buffers in a fixed order: `w0, b0, w1, b1, ...`.
    pub fn buffers(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.data(), l.bias.as_slice()])
    }

    pub fn buffers_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.data_mut(), l.bias.as_mut_slice()])
    }

    pub fn len(&self) -> usize {
        self.buffers().map(<[f64]>::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.buffers().flatten().copied().collect()
    }

    pub fn from_flat(spec: &NetworkSpec, flat: &[f64]) -> Result<Self> {
        let mut params = Self::zeros(spec);
        if flat.len() != params.len() {
            return Err(Error::Shape(format!(
                "{} values for a network with {} parameters",
                flat.len(),
                params.len()
            )));
        }
        let mut offset = 0;
        for buf in params.buffers_mut() {
            buf.copy_from_slice(&flat[offset..offset + buf.len()]);
            offset += buf.len();
        }
        Ok(params)
    }

    pub(crate) fn same_shape(&self, other: &NetworkParams) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weights.rows() == b.weights.rows()
                    && a.weights.cols() == b.weights.cols()
                    && a.bias.len() == b.bias.len()
            })
    }

    fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        let dims = spec.layer_dims();
        let ok = dims.len() == self.layers.len()
            && dims.iter().zip(&self.layers).all(|(&(i, o), l)| {
                l.weights.rows() == i && l.weights.cols() == o && l.bias.len() == o
            });
        if ok {
            Ok(())
        } else {
            Err(Error::Shape("parameters do not match network spec".into()))
        }
    }
}

/// He-normal weights (`N(0, 2 / fan_in)`), zero biases.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> Result<NetworkParams> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut params = NetworkParams::zeros(spec);
    for layer in &mut params.layers {
        let fan_in = layer.weights.rows() as f64;
        let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
        for w in layer.weights.data_mut() {
            *w = normal.sample(&mut rng);
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active, masks drawn from a stream seeded with `seed`.
    Train {
        seed: u64,
    },
    Eval,
}

/// Intermediate values kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input seen by each dense layer: the batch, then each post-dropout hidden activation.
    layer_inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    /// Inverted-dropout multipliers (`0` or `1 / keep`), `None` where dropout was inactive.
    masks: Vec<Option<Vec<f64>>>,
}

impl ForwardCache {
    /// Post-dropout activations of hidden layer `i`.
    pub fn hidden_activation(&self, i: usize) -> &Matrix {
        &self.layer_inputs[i + 1]
    }
}

fn affine(input: &Matrix, layer: &DenseParams) -> Matrix {
    let mut out = input.matmul(&layer.weights);
    for r in 0..out.rows() {
        for (o, b) in out.row_mut(r).iter_mut().zip(&layer.bias) {
            *o += b;
        }
    }
    out
}

/// Runs the network on `batch` (one sample per row).
///
/// Returns logits for the softmax head and raw outputs for the MSE head.
pub fn forward(
    params: &NetworkParams,
    spec: &NetworkSpec,
    batch: &Matrix,
    mode: Mode,
) -> Result<(Matrix, ForwardCache)> {
    params.check_against(spec)?;
    if batch.cols() != spec.input_dim {
        return Err(Error::Shape(format!(
            "batch has {} columns, network expects {}",
            batch.cols(),
            spec.input_dim
        )));
    }
    let mut rng = match mode {
        Mode::Train { seed } => Some(rng_from_seed(seed)),
        Mode::Eval => None,
    };
    let hidden = spec.hidden_widths.len();
    let mut layer_inputs = Vec::with_capacity(hidden + 1);
    let mut pre_activations = Vec::with_capacity(hidden);
    let mut masks = Vec::with_capacity(hidden);
    layer_inputs.push(batch.clone());

    for (i, layer) in params.layers[..hidden].iter().enumerate() {
        let pre = affine(&layer_inputs[i], layer);
        let mut act = pre.clone();
        for v in act.data_mut() {
            *v = v.max(0.0);
        }
        let rate = spec.dropout_rates[i];
        let mask = match rng.as_mut() {
            Some(rng) if rate > 0.0 => {
                let scale = 1.0 / (1.0 - rate);
                let mask: Vec<f64> = (0..act.data().len())
                    .map(|_| {
                        if rng.random::<f64>() < rate {
                            0.0
                        } else {
                            scale
                        }
                    })
                    .collect();
                for (v, m) in act.data_mut().iter_mut().zip(&mask) {
                    *v *= m;
                }
                Some(mask)
            }
            _ => None,
        };
        pre_activations.push(pre);
        masks.push(mask);
        layer_inputs.push(act);
    }
    let out = affine(&layer_inputs[hidden], &params.layers[hidden]);
    Ok((
        out,
        ForwardCache {
            layer_inputs,
            pre_activations,
            masks,
        },
    ))
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Supervision for one batch.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Classes(&'a [usize]),
    Values(&'a Matrix),
}

impl Targets<'_> {
    fn check(&self, spec: &NetworkSpec, rows: usize) -> Result<()> {
        match (self, spec.output_head) {
            (Targets::Classes(labels), OutputHead::SoftmaxCrossEntropy) => {
                if labels.len() != rows {
                    return Err(Error::Shape(format!(
                        "{} labels for {rows} samples",
                        labels.len()
                    )));
                }
                if let Some(&bad) = labels.iter().find(|&&l| l >= spec.output_dim) {
                    return Err(Error::InvalidArgument(format!(
                        "label {bad} out of range for {} classes",
                        spec.output_dim
                    )));
                }
                Ok(())
            }
            (Targets::Values(t), OutputHead::MeanSquaredError) => {
                if t.rows() != rows || t.cols() != spec.output_dim {
                    return Err(Error::Shape(format!(
                        "targets are {}x{}, expected {rows}x{}",
                        t.rows(),
                        t.cols(),
                        spec.output_dim
                    )));
                }
                Ok(())
            }
            _ => Err(Error::InvalidArgument(
                "target kind does not match the output head".into(),
            )),
        }
    }
}

/// Mean loss and its gradient w.r.t. the network output.
fn loss_and_output_grad(out: &Matrix, targets: Targets<'_>) -> (f64, Matrix) {
    let n = out.rows() as f64;
    match targets {
        Targets::Classes(labels) => {
            let mut grad = softmax_rows(out);
            let mut total = 0.0;
            for (r, &label) in labels.iter().enumerate() {
                let row = out.row(r);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                total += lse - row[label];
                let g = grad.row_mut(r);
                g[label] -= 1.0;
                for v in g.iter_mut() {
                    *v /= n;
                }
            }
            (total / n, grad)
        }
        Targets::Values(t) => {
            let count = (out.rows() * out.cols()) as f64;
            let mut grad = out.clone();
            let mut total = 0.0;
            for (g, y) in grad.data_mut().iter_mut().zip(t.data()) {
                let diff = *g - y;
                total += diff * diff;
                *g = 2.0 * diff / count;
            }
            (total / count, grad)
        }
    }
}

/// Mean loss over the batch.
pub fn loss(
    params: &NetworkParams,
    spec: &NetworkSpec,
    batch: &Matrix,
    targets: Targets<'_>,
    mode: Mode,
) -> Result<f64> {
    targets.check(spec, batch.rows())?;
    let (out, _) = forward(params, spec, batch, mode)?;
    Ok(loss_and_output_grad(&out, targets).0)
}

/// Mean loss over the batch and its exact gradient w.r.t. every parameter.
///
/// In `Train` mode the gradient is that of the loss under the sampled dropout mask.
pub fn loss_and_grads(
    params: &NetworkParams,
    spec: &NetworkSpec,
    batch: &Matrix,
    targets: Targets<'_>,
    mode: Mode,
) -> Result<(f64, NetworkParams)> {
    targets.check(spec, batch.rows())?;
    let (out, cache) = forward(params, spec, batch, mode)?;
    let (loss, mut delta) = loss_and_output_grad(&out, targets);

    let mut grads = Vec::with_capacity(params.layers.len());
    for l in (0..params.layers.len()).rev() {
        let input = &cache.layer_inputs[l];
        let weights = input.t_matmul(&delta);
        let bias = delta.sum_rows();
        if l > 0 {
            let mut back = delta.matmul_t(&params.layers[l].weights);
            let pre = &cache.pre_activations[l - 1];
            match &cache.masks[l - 1] {
                Some(mask) => {
                    for ((g, p), m) in back.data_mut().iter_mut().zip(pre.data()).zip(mask) {
                        *g = if *p > 0.0 { *g * m } else { 0.0 };
                    }
                }
                None => {
                    for (g, p) in back.data_mut().iter_mut().zip(pre.data()) {
                        if *p <= 0.0 {
                            *g = 0.0;
                        }
                    }
                }
            }
            delta = back;
        }
        grads.push(DenseParams { weights, bias });
    }
    grads.reverse();
    Ok((loss, NetworkParams { layers: grads }))
}
