//! Random-search baseline with the same log shape as the ASNN loop.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::IterationLog;
use crate::rng::{derive_seed, rng_from_seed, streams, Rng};
use crate::task::{Architecture, Evaluator, MAX_WIDTH};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthSampling {
    Uniform,
    LogUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomSearchConfig {
    pub iterations: usize,
    pub trials_per_eval: usize,
    pub depth: usize,
    pub min_width: usize,
    pub max_width: usize,
    pub sampling: WidthSampling,
    pub seed: u64,
}

impl Default for RandomSearchConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            trials_per_eval: 10,
            depth: 2,
            min_width: 16,
            max_width: 256,
            sampling: WidthSampling::Uniform,
            seed: 0,
        }
    }
}

impl RandomSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.trials_per_eval == 0 {
            return Err(Error::Config(
                "random search needs iterations >= 1 and trials_per_eval >= 1".into(),
            ));
        }
        if !(2..=3).contains(&self.depth) {
            return Err(Error::Config(format!(
                "depth must be 2 or 3, got {}",
                self.depth
            )));
        }
        if self.min_width < 1 || self.min_width > self.max_width || self.max_width > MAX_WIDTH {
            return Err(Error::Config(format!(
                "width range [{}, {}] must satisfy 1 <= min <= max <= {MAX_WIDTH}",
                self.min_width, self.max_width
            )));
        }
        Ok(())
    }
}

fn draw_width(rng: &mut Rng, cfg: &RandomSearchConfig) -> usize {
    match cfg.sampling {
        WidthSampling::Uniform => rng.random_range(cfg.min_width..=cfg.max_width),
        WidthSampling::LogUniform => {
            let lo = (cfg.min_width as f64).ln();
            let hi = ((cfg.max_width + 1) as f64).ln();
            let w = rng.random_range(lo..hi).exp().floor() as usize;
            w.clamp(cfg.min_width, cfg.max_width)
        }
    }
}

/// Draws `cfg.iterations` architectures and evaluates each.
///
/// Draws come from one stream; evaluation `i` is seeded from another, so the
/// architecture sequence does not depend on the backend.
pub fn run_random_search(
    cfg: &RandomSearchConfig,
    evaluator: &dyn Evaluator,
) -> Result<Vec<IterationLog>> {
    cfg.validate()?;
    let mut draws = rng_from_seed(derive_seed(cfg.seed, streams::DRAW));
    let eval_base = derive_seed(cfg.seed, streams::EVAL);
    let mut best = f64::NEG_INFINITY;
    let mut logs = Vec::with_capacity(cfg.iterations);
    for i in 0..cfg.iterations {
        let widths = (0..cfg.depth)
            .map(|_| draw_width(&mut draws, cfg))
            .collect();
        let architecture = Architecture::new(widths)?;
        let trial = evaluator
            .evaluate(
                &architecture,
                cfg.trials_per_eval,
                derive_seed(eval_base, i as u64),
            )
            .map_err(|e| Error::Iteration {
                iteration: i,
                source: Box::new(e),
            })?;
        best = best.max(trial.mean);
        logs.push(IterationLog {
            iteration: i,
            prediction: None,
            expected_mean: evaluator.expected_mean(&architecture),
            architecture,
            clamped: false,
            trial,
            record_count: None,
            best_so_far: best,
            asnn_loss: None,
            seeds: None,
        });
    }
    Ok(logs)
}
