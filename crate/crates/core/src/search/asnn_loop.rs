//! The suggest, evaluate, append loop driven by the ASNN.

use serde::{Deserialize, Serialize};

use crate::dataset::{shuffle_samples, ArchRecord, AsnnDataset, AugmentConfig, TrialCountPolicy};
use crate::model::{quantize, train_asnn, AsnnConfig, RealArchPrediction, WidthBounds};
use crate::rng::{derive_seed, streams};
use crate::task::{Architecture, Evaluator, TrialResult};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopConfig {
    pub max_iterations: usize,
    /// Stop once the best mean in the dataset reaches this.
    pub target_mean_accuracy: Option<f64>,
    pub trials_per_eval: usize,
    /// Sample count and strategy; the seed is replaced per iteration.
    pub augment: AugmentConfig,
    /// Network and optimiser settings; the seed is replaced per iteration.
    pub asnn: AsnnConfig,
    pub bounds: WidthBounds,
    pub policy: TrialCountPolicy,
    pub seed: u64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            target_mean_accuracy: None,
            trials_per_eval: 10,
            augment: AugmentConfig::default(),
            asnn: AsnnConfig::default(),
            bounds: WidthBounds::default(),
            policy: TrialCountPolicy::PadOrTruncate,
            seed: 0,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.trials_per_eval == 0 {
            return Err(Error::Config("trials_per_eval must be >= 1".into()));
        }
        if let Some(t) = self.target_mean_accuracy {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!(
                    "target_mean_accuracy {t} outside (0, 1]"
                )));
            }
        }
        self.bounds.validate()
    }
}

/// Every seed one iteration consumed, so it can be replayed in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSeeds {
    pub augment: u64,
    pub sample_order: u64,
    pub asnn: u64,
    pub eval: u64,
}

impl IterationSeeds {
    /// Seeds of iteration `i` of a run seeded with `run_seed`.
    pub fn derive(run_seed: u64, i: usize) -> Self {
        let it = derive_seed(derive_seed(run_seed, streams::ITERATION), i as u64);
        Self {
            augment: derive_seed(it, streams::AUGMENT),
            sample_order: derive_seed(it, streams::SAMPLE_ORDER),
            asnn: derive_seed(it, streams::ASNN),
            eval: derive_seed(it, streams::EVAL),
        }
    }
}

/// One evaluated suggestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Raw ASNN output; absent for random search.
    pub prediction: Option<RealArchPrediction>,
    pub architecture: Architecture,
    /// Whether quantization had to clamp a width into bounds.
    pub clamped: bool,
    pub trial: TrialResult,
    /// Records in the ASNN dataset after the append; absent for random search.
    pub record_count: Option<usize>,
    /// Highest trial mean among this run's evaluations so far.
    pub best_so_far: f64,
    /// Noise-free mean, for simulation backends.
    pub expected_mean: Option<f64>,
    /// ASNN training MSE after fitting.
    pub asnn_loss: Option<f64>,
    pub seeds: Option<IterationSeeds>,
}

/// What one ASNN iteration produced before it is appended.
#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub prediction: RealArchPrediction,
    pub architecture: Architecture,
    pub clamped: bool,
    pub trial: TrialResult,
    pub asnn_loss: f64,
}

/// Augment, shuffle, fit, query, quantize and evaluate once against `dataset`.
pub fn suggest_and_evaluate(
    dataset: &AsnnDataset,
    cfg: &LoopConfig,
    seeds: &IterationSeeds,
    evaluator: &dyn Evaluator,
) -> Result<Suggestion> {
    let augment = AugmentConfig {
        seed: seeds.augment,
        ..cfg.augment.clone()
    };
    let samples = shuffle_samples(dataset.augment(&augment)?, seeds.sample_order);
    let asnn_cfg = AsnnConfig {
        seed: seeds.asnn,
        ..cfg.asnn.clone()
    };
    let model = train_asnn(&samples, &asnn_cfg)?;
    let prediction = model.predict_canonical()?;
    let q = quantize(&prediction, cfg.bounds)?;
    let trial = evaluator.evaluate(&q.arch, cfg.trials_per_eval, seeds.eval)?;
    Ok(Suggestion {
        prediction,
        architecture: q.arch,
        clamped: q.clamped,
        trial,
        asnn_loss: model.final_loss,
    })
}

/// Logs plus the dataset as it stood when the loop stopped.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub logs: Vec<IterationLog>,
    pub dataset: AsnnDataset,
}

/// Runs the ASNN search from `initial_records`.
///
/// The target check looks at the best mean in the dataset before each
/// iteration, so a target already met by the initial records yields no
/// iterations.
pub fn run_asnn_search(
    cfg: &LoopConfig,
    initial_records: Vec<ArchRecord>,
    evaluator: &dyn Evaluator,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let mut dataset = AsnnDataset::ingest(initial_records, cfg.policy)?;
    let mut logs = Vec::with_capacity(cfg.max_iterations);
    let mut best = f64::NEG_INFINITY;
    for i in 0..cfg.max_iterations {
        if cfg
            .target_mean_accuracy
            .is_some_and(|t| dataset.best_mean() >= t)
        {
            break;
        }
        let seeds = IterationSeeds::derive(cfg.seed, i);
        let step = suggest_and_evaluate(&dataset, cfg, &seeds, evaluator)
            .and_then(|s| dataset.append_trial(&s.trial).map(|()| s))
            .map_err(|e| Error::Iteration {
                iteration: i,
                source: Box::new(e),
            })?;
        best = best.max(step.trial.mean);
        logs.push(IterationLog {
            iteration: i,
            expected_mean: evaluator.expected_mean(&step.architecture),
            prediction: Some(step.prediction),
            architecture: step.architecture,
            clamped: step.clamped,
            trial: step.trial,
            record_count: Some(dataset.len()),
            best_so_far: best,
            asnn_loss: Some(step.asnn_loss),
            seeds: Some(seeds),
        });
    }
    Ok(SearchOutcome { logs, dataset })
}
