//! Training data for the ASNN.
//!
//! Each [`ArchRecord`] pairs an architecture with the 10 accuracies it
//! reached over repeated training. The model is trained on [`AsnnSample`]s:
//! the accuracies (scaled by 100) as input, the widths as the regression
//! target. Since the 10 trials of one architecture are exchangeable, the
//! sample set is grown by permuting each record's accuracies.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, rng_from_seed};
use crate::task::{Architecture, TrialResult};
use crate::{Error, Result};

/// Number of accuracies per record, and the ASNN input width.
pub const ACCURACIES_PER_RECORD: usize = 10;

/// Factor applied to accuracies before they enter the ASNN.
pub const INPUT_SCALE: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchRecord {
    pub arch: Architecture,
    pub accuracies: Vec<f64>,
    /// Mean as stored (printed tables carry a rounded mean).
    pub mean: f64,
}

impl ArchRecord {
    pub fn new(arch: Architecture, accuracies: Vec<f64>, mean: f64) -> Result<Self> {
        if accuracies.len() != ACCURACIES_PER_RECORD {
            return Err(Error::Data(format!(
                "record {arch} has {} accuracies, expected {ACCURACIES_PER_RECORD}",
                accuracies.len()
            )));
        }
        if let Some(a) = accuracies.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Data(format!(
                "record {arch}: accuracy {a} outside [0, 1]"
            )));
        }
        Ok(Self {
            arch,
            accuracies,
            mean,
        })
    }

    pub fn recomputed_mean(&self) -> f64 {
        self.accuracies.iter().sum::<f64>() / self.accuracies.len() as f64
    }

    fn key(&self) -> (Architecture, Vec<u64>) {
        (
            self.arch.clone(),
            self.accuracies.iter().map(|a| a.to_bits()).collect(),
        )
    }
}

/// What to do with a trial result whose `K` is not 10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialCountPolicy {
    /// Reject anything but exactly 10 accuracies.
    Strict,
    /// Repeat the accuracies cyclically up to 10, or keep the first 10.
    PadOrTruncate,
}

impl TrialCountPolicy {
    pub fn to_record(self, result: &TrialResult) -> Result<ArchRecord> {
        let k = result.accuracies.len();
        let accuracies = match self {
            _ if k == ACCURACIES_PER_RECORD => result.accuracies.clone(),
            TrialCountPolicy::Strict => {
                return Err(Error::InvalidArgument(format!(
                    "{k} trial accuracies, strict mode needs {ACCURACIES_PER_RECORD}"
                )))
            }
            TrialCountPolicy::PadOrTruncate if k == 0 => {
                return Err(Error::InvalidArgument(
                    "trial result has no accuracies".into(),
                ))
            }
            TrialCountPolicy::PadOrTruncate => result
                .accuracies
                .iter()
                .cycle()
                .take(ACCURACIES_PER_RECORD)
                .copied()
                .collect(),
        };
        ArchRecord::new(result.architecture.clone(), accuracies, result.mean)
    }
}

/// One supervised ASNN example.
#[derive(Debug, Clone, PartialEq)]
pub struct AsnnSample {
    /// Accuracies times [`INPUT_SCALE`], in `[0, 100]`.
    pub input: [f64; ACCURACIES_PER_RECORD],
    /// Layer widths as reals.
    pub target: Vec<f64>,
    /// Index of the record this sample was drawn from.
    pub source: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmentStrategy {
    PermuteWithinRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentConfig {
    pub target_size: usize,
    pub seed: u64,
    pub strategy: AugmentStrategy,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            target_size: 10_000,
            seed: 0,
            strategy: AugmentStrategy::PermuteWithinRecord,
        }
    }
}

/// The growing set of records the ASNN learns from.
#[derive(Debug, Clone, PartialEq)]
pub struct AsnnDataset {
    depth: usize,
    records: Vec<ArchRecord>,
    policy: TrialCountPolicy,
}

impl AsnnDataset {
    /// Rejects empty input, mixed depths and exact duplicates.
    pub fn ingest(records: Vec<ArchRecord>, policy: TrialCountPolicy) -> Result<Self> {
        let depth = records
            .first()
            .ok_or_else(|| Error::Data("no records to ingest".into()))?
            .arch
            .depth();
        let mut seen = HashSet::new();
        for r in &records {
            if r.arch.depth() != depth {
                return Err(Error::Data(format!(
                    "mixed depths: {} after depth-{depth} records",
                    r.arch
                )));
            }
            if !seen.insert(r.key()) {
                return Err(Error::Data(format!("duplicate record for {}", r.arch)));
            }
        }
        Ok(Self {
            depth,
            records,
            policy,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn records(&self) -> &[ArchRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn policy(&self) -> TrialCountPolicy {
        self.policy
    }

    /// Highest stored mean.
    pub fn best_mean(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.mean)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Adds one evaluated architecture. Re-evaluations of a known architecture are kept.
    pub fn append_trial(&mut self, result: &TrialResult) -> Result<()> {
        if result.architecture.depth() != self.depth {
            return Err(Error::InvalidArgument(format!(
                "trial for {} does not match dataset depth {}",
                result.architecture, self.depth
            )));
        }
        let record = self.policy.to_record(result)?;
        self.records.push(record);
        Ok(())
    }

    /// Emits `cfg.target_size` samples, visiting records round-robin and
    /// permuting each visit's accuracies uniformly at random.
    ///
    /// Sample `j` comes from record `j % R`, so record counts differ by at most one.
    /// Sample `j`'s permutation uses stream `derive_seed(cfg.seed, j)`.
    pub fn augment(&self, cfg: &AugmentConfig) -> Result<Vec<AsnnSample>> {
        let r = self.records.len();
        if cfg.target_size < r {
            return Err(Error::InvalidArgument(format!(
                "augmentation target {} smaller than the {r} source records",
                cfg.target_size
            )));
        }
        let AugmentStrategy::PermuteWithinRecord = cfg.strategy;
        let samples = (0..cfg.target_size)
            .map(|j| {
                let source = j % r;
                let record = &self.records[source];
                let mut acc = [0.0; ACCURACIES_PER_RECORD];
                acc.copy_from_slice(&record.accuracies);
                acc.shuffle(&mut rng_from_seed(derive_seed(cfg.seed, j as u64)));
                AsnnSample {
                    input: acc.map(|a| a * INPUT_SCALE),
                    target: record.arch.widths().iter().map(|&w| w as f64).collect(),
                    source,
                }
            })
            .collect();
        Ok(samples)
    }
}

/// Seeded uniform reordering of `samples`.
pub fn shuffle_samples(mut samples: Vec<AsnnSample>, seed: u64) -> Vec<AsnnSample> {
    samples.shuffle(&mut rng_from_seed(seed));
    samples
}
