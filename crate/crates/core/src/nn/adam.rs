use serde::{Deserialize, Serialize};

use super::NetworkParams;
use crate::{Error, Result};

/// Adam hyperparameters. Defaults follow the common framework defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |b: f64| b > 0.0 && b < 1.0;
        if !unit(self.beta1) || !unit(self.beta2) {
            return Err(Error::InvalidArgument(format!(
                "Adam betas must lie in (0, 1), got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || self.epsilon.is_nan()
            || self.epsilon <= 0.0
        {
            return Err(Error::InvalidArgument(
                "Adam learning rate and epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update over flat buffers, at step `t` (1-based, already incremented).
///
/// ```text
/// m <- b1 m + (1 - b1) g
/// v <- b2 v + (1 - b2) g^2
/// w <- w - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// ```
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &AdamConfig,
) {
    assert!(t >= 1, "Adam step counter starts at 1");
    let n = params.len();
    assert!(
        grads.len() == n && m.len() == n && v.len() == n,
        "Adam buffer lengths"
    );
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..n {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Optimizer state mirroring a [`NetworkParams`] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: NetworkParams,
    pub v: NetworkParams,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(like: &NetworkParams, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let mut m = like.clone();
        for buf in m.buffers_mut() {
            buf.fill(0.0);
        }
        Ok(Self {
            step: 0,
            v: m.clone(),
            m,
            config,
        })
    }

    /// Applies one update to `params` and advances the step counter.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &NetworkParams) -> Result<()> {
        if !params.same_shape(grads) || !params.same_shape(&self.m) {
            return Err(Error::Shape(
                "Adam: params, grads and state disagree".into(),
            ));
        }
        self.step += 1;
        let t = self.step;
        let cfg = self.config;
        let buffers = params
            .buffers_mut()
            .zip(grads.buffers())
            .zip(self.m.buffers_mut().zip(self.v.buffers_mut()));
        for ((p, g), (m, v)) in buffers {
            adam_update(p, g, m, v, t, &cfg);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Activation, NetworkSpec, OutputHead};

    #[test]
    fn first_step_scalar() {
        // m = 0.1, v = 0.001 -> m_hat = 1, v_hat = 1 -> w = -lr / (1 + eps)
        let cfg = AdamConfig::default();
        let (mut w, mut m, mut v) = ([0.0], [0.0], [0.0]);
        adam_update(&mut w, &[1.0], &mut m, &mut v, 1, &cfg);
        let expected = -0.001 / (1.0 + 1e-7);
        assert!((w[0] - expected).abs() < 1e-12, "{} vs {expected}", w[0]);
        assert!((m[0] - 0.1).abs() < 1e-15);
        assert!((v[0] - 0.001).abs() < 1e-15);
    }

    fn small_spec() -> NetworkSpec {
        NetworkSpec {
            input_dim: 3,
            hidden_widths: vec![4],
            hidden_activation: Activation::Relu,
            dropout_rates: vec![0.0],
            output_dim: 2,
            output_head: OutputHead::MeanSquaredError,
        }
    }

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let spec = small_spec();
        let mut params = init_params(&spec, 3).unwrap();
        let before = params.clone();
        let zeros = NetworkParams::zeros(&spec);
        let mut state = AdamState::new(&params, AdamConfig::default()).unwrap();
        for _ in 0..5 {
            state.step(&mut params, &zeros).unwrap();
        }
        assert_eq!(params, before);
        assert_eq!(state.step, 5);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let spec = small_spec();
        let mut params = init_params(&spec, 3).unwrap();
        let mut other = small_spec();
        other.hidden_widths = vec![5];
        let grads = NetworkParams::zeros(&other);
        let mut state = AdamState::new(&params, AdamConfig::default()).unwrap();
        assert!(state.step(&mut params, &grads).is_err());
    }

    #[test]
    fn invalid_betas_rejected() {
        let cfg = AdamConfig {
            beta1: 1.0,
            ..AdamConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
