//! Analytic gradients against central finite differences.

mod common;

use asnn_core::nn::OutputHead;
use common::{check_one, MAX_REL_ERR};

#[test]
fn softmax_head_gradients_match() {
    for seed in 0..25 {
        let err = check_one(seed, OutputHead::SoftmaxCrossEntropy, false);
        assert!(err < MAX_REL_ERR, "seed {seed}: rel err {err:e}");
    }
}

#[test]
fn mse_head_gradients_match() {
    for seed in 100..125 {
        let err = check_one(seed, OutputHead::MeanSquaredError, false);
        assert!(err < MAX_REL_ERR, "seed {seed}: rel err {err:e}");
    }
}

#[test]
fn gradients_match_under_a_fixed_dropout_mask() {
    for seed in 200..210 {
        for head in [
            OutputHead::SoftmaxCrossEntropy,
            OutputHead::MeanSquaredError,
        ] {
            let err = check_one(seed, head, true);
            assert!(err < MAX_REL_ERR, "seed {seed} {head:?}: rel err {err:e}");
        }
    }
}
