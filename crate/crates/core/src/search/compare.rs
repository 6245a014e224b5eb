//! Equal-budget comparison of search strategies over many seeds.

use rayon::prelude::*;
use serde::Serialize;

use super::{run_asnn_search, run_random_search, IterationLog, LoopConfig, RandomSearchConfig};
use crate::dataset::ArchRecord;
use crate::rng::{derive_seed, streams};
use crate::task::{Architecture, Evaluator};
use crate::{Error, Result};

/// A named strategy. Its own seed field is replaced per comparison seed.
#[derive(Debug, Clone)]
pub enum Strategy {
    Asnn {
        name: String,
        config: LoopConfig,
        initial_records: Vec<ArchRecord>,
    },
    Random {
        name: String,
        config: RandomSearchConfig,
    },
}

impl Strategy {
    pub fn name(&self) -> &str {
        match self {
            Strategy::Asnn { name, .. } | Strategy::Random { name, .. } => name,
        }
    }

    /// `(evaluations, trials per evaluation)`.
    fn budget(&self) -> Result<(usize, usize)> {
        match self {
            Strategy::Asnn { config, .. } => {
                if config.target_mean_accuracy.is_some() {
                    return Err(Error::Config(format!(
                        "strategy {}: a stopping target makes the budget variable",
                        self.name()
                    )));
                }
                Ok((config.max_iterations, config.trials_per_eval))
            }
            Strategy::Random { config, .. } => Ok((config.iterations, config.trials_per_eval)),
        }
    }

    fn run(&self, seed: u64, evaluator: &dyn Evaluator) -> Result<Vec<IterationLog>> {
        match self {
            Strategy::Asnn {
                config,
                initial_records,
                ..
            } => {
                let cfg = LoopConfig {
                    seed,
                    ..config.clone()
                };
                Ok(run_asnn_search(&cfg, initial_records.clone(), evaluator)?.logs)
            }
            Strategy::Random { config, .. } => {
                let cfg = RandomSearchConfig {
                    seed,
                    ..config.clone()
                };
                run_random_search(&cfg, evaluator)
            }
        }
    }
}

/// One line of the comparison CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub strategy: String,
    pub seed: usize,
    pub iteration: usize,
    pub arch: Architecture,
    pub mean: f64,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: String,
    /// Median over seeds of the final best-so-far.
    pub median_best: f64,
    /// Per seed, 1-based evaluation count at which best-so-far first met the threshold.
    pub evaluations_to_threshold: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub threshold: Option<f64>,
    pub rows: Vec<CompareRow>,
    pub summaries: Vec<StrategySummary>,
}

/// Median of a non-empty slice; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Seed that comparison run `index` hands to every strategy.
pub fn comparison_seed(base_seed: u64, index: usize) -> u64 {
    derive_seed(derive_seed(base_seed, streams::SEED_INDEX), index as u64)
}

/// Runs every strategy for `n_seeds` seeds against one backend.
///
/// All strategies must spend the same number of evaluations with the same `K`.
pub fn compare_strategies(
    strategies: &[Strategy],
    n_seeds: usize,
    base_seed: u64,
    threshold: Option<f64>,
    evaluator: &dyn Evaluator,
) -> Result<CompareReport> {
    if strategies.is_empty() || n_seeds == 0 {
        return Err(Error::Config(
            "compare needs >= 1 strategy and >= 1 seed".into(),
        ));
    }
    let budget = strategies[0].budget()?;
    for s in &strategies[1..] {
        let b = s.budget()?;
        if b != budget {
            return Err(Error::Config(format!(
                "budget mismatch: {} runs {} evaluations x {} trials, {} runs {} x {}",
                strategies[0].name(),
                budget.0,
                budget.1,
                s.name(),
                b.0,
                b.1
            )));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..strategies.len())
        .flat_map(|s| (0..n_seeds).map(move |k| (s, k)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(s, k)| strategies[s].run(comparison_seed(base_seed, k), evaluator))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (s, strategy) in strategies.iter().enumerate() {
        let per_seed = &runs[s * n_seeds..(s + 1) * n_seeds];
        let mut finals = Vec::with_capacity(n_seeds);
        let mut to_threshold = Vec::with_capacity(n_seeds);
        for (k, logs) in per_seed.iter().enumerate() {
            for log in logs {
                rows.push(CompareRow {
                    strategy: strategy.name().to_string(),
                    seed: k,
                    iteration: log.iteration,
                    arch: log.architecture.clone(),
                    mean: log.trial.mean,
                    best_so_far: log.best_so_far,
                });
            }
            finals.push(logs.last().map_or(f64::NEG_INFINITY, |l| l.best_so_far));
            to_threshold.push(
                threshold.and_then(|t| logs.iter().position(|l| l.best_so_far >= t).map(|p| p + 1)),
            );
        }
        summaries.push(StrategySummary {
            strategy: strategy.name().to_string(),
            median_best: median(&finals),
            evaluations_to_threshold: to_threshold,
        });
    }
    Ok(CompareReport {
        threshold,
        rows,
        summaries,
    })
}
