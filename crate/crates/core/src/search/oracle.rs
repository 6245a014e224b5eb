//! Simulation backend answering evaluations from a stored grid.

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::dataset::ArchRecord;
use crate::rng::rng_from_seed;
use crate::tables;
use crate::task::{Architecture, Evaluator, TrialResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellStats {
    mean: f64,
    std: f64,
}

/// Grid of per-cell accuracy statistics with log2-width interpolation.
///
/// Off-grid widths are clamped to the grid hull, then cell means and stds are
/// blended multilinearly in `log2(width)`. A draw is
/// `mean + std * noise_scale * z`, `z ~ N(0, 1)`, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularOracle {
    depth: usize,
    nodes: Vec<usize>,
    cells: BTreeMap<Vec<usize>, CellStats>,
    noise_scale: f64,
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

impl TabularOracle {
    /// Builds an oracle from records covering a full Cartesian grid.
    ///
    /// Cell statistics come from the stored accuracies, not the printed mean.
    pub fn from_records(records: &[ArchRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Data("oracle needs at least one record".into()))?;
        let depth = first.arch.depth();
        let mut nodes: Vec<usize> = records
            .iter()
            .flat_map(|r| r.arch.widths().iter().copied())
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut cells = BTreeMap::new();
        for r in records {
            if r.arch.depth() != depth {
                return Err(Error::Data(format!(
                    "oracle records mix depths {depth} and {}",
                    r.arch.depth()
                )));
            }
            let mean = r.recomputed_mean();
            let stats = CellStats {
                mean,
                std: sample_std(&r.accuracies, mean),
            };
            if cells.insert(r.arch.widths().to_vec(), stats).is_some() {
                return Err(Error::Data(format!("oracle cell {} listed twice", r.arch)));
            }
        }
        let expected = nodes.len().pow(depth as u32);
        if cells.len() != expected {
            return Err(Error::Data(format!(
                "oracle grid incomplete: {} cells over {} node values, expected {expected}",
                cells.len(),
                nodes.len()
            )));
        }
        Ok(Self {
            depth,
            nodes,
            cells,
            noise_scale: 1.0,
        })
    }

    /// Oracle over the embedded grid for `depth` (2 or 3).
    pub fn embedded(depth: usize) -> Result<Self> {
        let records = tables::records_for_depth(depth)
            .ok_or_else(|| Error::InvalidArgument(format!("no embedded grid for depth {depth}")))?;
        Self::from_records(&records)
    }

    /// Multiplier on the per-cell std; 0 makes the oracle deterministic.
    pub fn with_noise_scale(mut self, noise_scale: f64) -> Result<Self> {
        if !(noise_scale.is_finite() && noise_scale >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise scale must be finite and >= 0, got {noise_scale}"
            )));
        }
        self.noise_scale = noise_scale;
        Ok(self)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// Node values along every axis, ascending.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Grid cells with their stored mean, in ascending width order.
    pub fn cells(&self) -> impl Iterator<Item = (Architecture, f64)> + '_ {
        self.cells.iter().map(|(w, s)| {
            (
                Architecture::new(w.clone()).expect("grid widths are valid"),
                s.mean,
            )
        })
    }

    fn check_depth(&self, arch: &Architecture) -> Result<()> {
        if arch.depth() != self.depth {
            return Err(Error::InvalidArgument(format!(
                "architecture {arch} has depth {}, oracle has depth {}",
                arch.depth(),
                self.depth
            )));
        }
        Ok(())
    }

    /// Interpolated `(mean, std)` for real-valued widths.
    pub fn stats_at(&self, widths: &[f64]) -> Result<(f64, f64)> {
        if widths.len() != self.depth {
            return Err(Error::InvalidArgument(format!(
                "{} widths given to a depth-{} oracle",
                widths.len(),
                self.depth
            )));
        }
        if let Some(w) = widths.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "width {w} must be positive"
            )));
        }
        let logs: Vec<f64> = self.nodes.iter().map(|&n| (n as f64).log2()).collect();
        let last = logs.len() - 1;
        // Per axis: lower node index and weight of the upper node.
        let brackets: Vec<(usize, f64)> = widths
            .iter()
            .map(|w| {
                let t = w.log2().clamp(logs[0], logs[last]);
                if last == 0 {
                    return (0, 0.0);
                }
                let i = logs
                    .partition_point(|&l| l <= t)
                    .saturating_sub(1)
                    .min(last - 1);
                (i, (t - logs[i]) / (logs[i + 1] - logs[i]))
            })
            .collect();
        let mut mean = 0.0;
        let mut std = 0.0;
        let mut key = vec![0; self.depth];
        for corner in 0..1usize << self.depth {
            let mut weight = 1.0;
            for (axis, &(i, frac)) in brackets.iter().enumerate() {
                let upper = corner >> axis & 1 == 1;
                weight *= if upper { frac } else { 1.0 - frac };
                key[axis] = self.nodes[(i + usize::from(upper)).min(last)];
            }
            if weight == 0.0 {
                continue;
            }
            let cell = self.cells[&key];
            mean += weight * cell.mean;
            std += weight * cell.std;
        }
        Ok((mean, std))
    }

    /// Noise-free mean accuracy of `arch`.
    pub fn mean_of(&self, arch: &Architecture) -> Result<f64> {
        self.check_depth(arch)?;
        let widths: Vec<f64> = arch.widths().iter().map(|&w| w as f64).collect();
        Ok(self.stats_at(&widths)?.0)
    }
}

/// Draws `trials` simulated accuracies for `arch`.
pub fn evaluate_on_oracle(
    oracle: &TabularOracle,
    arch: &Architecture,
    trials: usize,
    seed: u64,
) -> Result<TrialResult> {
    oracle.check_depth(arch)?;
    let widths: Vec<f64> = arch.widths().iter().map(|&w| w as f64).collect();
    let (mean, std) = oracle.stats_at(&widths)?;
    let mut rng = rng_from_seed(seed);
    let accuracies = (0..trials)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (mean + std * oracle.noise_scale * z).clamp(0.0, 1.0)
        })
        .collect();
    TrialResult::from_accuracies(arch.clone(), accuracies)
}

impl Evaluator for TabularOracle {
    fn evaluate(&self, arch: &Architecture, trials: usize, seed: u64) -> Result<TrialResult> {
        evaluate_on_oracle(self, arch, trials, seed)
    }

    fn expected_mean(&self, arch: &Architecture) -> Option<f64> {
        self.mean_of(arch).ok()
    }

    fn label(&self) -> &str {
        "simulation"
    }
}
