//! Central finite-difference oracle shared by the gradient tests.

use asnn_core::nn::{
    init_params, loss, loss_and_grads, Activation, Matrix, Mode, NetworkParams, NetworkSpec,
    OutputHead, Targets,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-4;
pub const MAX_REL_ERR: f64 = 1e-4;
/// Denominator floor so entries with near-zero gradient compare absolutely.
pub const REL_FLOOR: f64 = 1e-6;

/// Central-difference gradient of the batch loss w.r.t. every flat parameter.
fn numeric_grad(
    params: &NetworkParams,
    spec: &NetworkSpec,
    x: &Matrix,
    t: Targets<'_>,
    mode: Mode,
) -> Vec<f64> {
    let base = params.to_flat();
    (0..base.len())
        .map(|i| {
            let mut plus = base.clone();
            plus[i] += STEP;
            let mut minus = base.clone();
            minus[i] -= STEP;
            let lp = loss(
                &NetworkParams::from_flat(spec, &plus).unwrap(),
                spec,
                x,
                t,
                mode,
            )
            .unwrap();
            let lm = loss(
                &NetworkParams::from_flat(spec, &minus).unwrap(),
                spec,
                x,
                t,
                mode,
            )
            .unwrap();
            (lp - lm) / (2.0 * STEP)
        })
        .collect()
}

fn random_spec(rng: &mut ChaCha8Rng, head: OutputHead, dropout: bool) -> NetworkSpec {
    loop {
        let depth = rng.random_range(1..=3);
        let hidden_widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=7)).collect();
        let spec = NetworkSpec {
            input_dim: rng.random_range(1..=6),
            dropout_rates: vec![if dropout { 0.3 } else { 0.0 }; depth],
            hidden_widths,
            hidden_activation: Activation::Relu,
            output_dim: rng.random_range(
                if head == OutputHead::SoftmaxCrossEntropy {
                    2
                } else {
                    1
                }..=4,
            ),
            output_head: head,
        };
        if spec.param_count() <= 200 {
            return spec;
        }
    }
}

/// Returns the worst relative error over all parameters of one random net.
pub fn check_one(seed: u64, head: OutputHead, dropout: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = random_spec(&mut rng, head, dropout);
    // Zero biases put dead-upstream units exactly on the ReLU kink; check at a generic point.
    let mut params = init_params(&spec, seed).unwrap();
    for layer in &mut params.layers {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    let n = 5;
    let x: Vec<f64> = (0..n * spec.input_dim)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let x = Matrix::from_vec(n, spec.input_dim, x).unwrap();
    let labels: Vec<usize> = (0..n)
        .map(|_| rng.random_range(0..spec.output_dim))
        .collect();
    let values: Vec<f64> = (0..n * spec.output_dim)
        .map(|_| rng.random_range(-3.0..3.0))
        .collect();
    let values = Matrix::from_vec(n, spec.output_dim, values).unwrap();
    let targets = match head {
        OutputHead::SoftmaxCrossEntropy => Targets::Classes(&labels),
        OutputHead::MeanSquaredError => Targets::Values(&values),
    };
    let mode = if dropout {
        Mode::Train { seed: seed ^ 0xD0 }
    } else {
        Mode::Eval
    };

    let (_, grads) = loss_and_grads(&params, &spec, &x, targets, mode).unwrap();
    let analytic = grads.to_flat();
    let numeric = numeric_grad(&params, &spec, &x, targets, mode);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR))
        .fold(0.0, f64::max)
}
