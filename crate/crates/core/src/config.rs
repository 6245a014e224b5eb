//! TOML run configuration with strict keys and an echo that parses back to
//! the same value.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{AugmentConfig, TrialCountPolicy};
use crate::model::{AsnnConfig, WidthBounds};
use crate::search::{LoopConfig, RandomSearchConfig, WidthSampling};
use crate::task::{EvalBudget, SyntheticSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[serde(alias = "CollectGrid")]
    CollectGrid,
    #[serde(alias = "AsnnSearch", alias = "asnn-search")]
    SearchAsnn,
    #[serde(alias = "RandomSearch", alias = "random-search")]
    SearchRandom,
    #[serde(alias = "Compare")]
    Compare,
    #[serde(alias = "VerifyTables")]
    VerifyTables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Oracle,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetPreset {
    Paper,
    #[default]
    Desk,
}

impl BudgetPreset {
    pub fn eval_budget(self) -> EvalBudget {
        match self {
            BudgetPreset::Paper => EvalBudget::paper(),
            BudgetPreset::Desk => EvalBudget::desk(),
        }
    }
}

/// Where the real trainer gets its data. At most one source may be set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Directory holding the four MNIST IDX files (optionally gzipped).
    pub mnist_dir: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsnnSection {
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for AsnnSection {
    fn default() -> Self {
        let d = AsnnConfig::default();
        Self {
            hidden_widths: d.hidden_widths,
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub max_iterations: usize,
    pub target_mean_accuracy: Option<f64>,
    /// Augmented samples per ASNN fit.
    pub augment_size: usize,
    pub asnn: AsnnSection,
    pub bounds: WidthBounds,
    pub policy: TrialCountPolicy,
    /// Grid CSV with the starting records; the embedded grid when absent.
    pub initial_grid: Option<PathBuf>,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = LoopConfig::default();
        Self {
            max_iterations: d.max_iterations,
            target_mean_accuracy: d.target_mean_accuracy,
            augment_size: d.augment.target_size,
            asnn: AsnnSection::default(),
            bounds: d.bounds,
            policy: d.policy,
            initial_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomSection {
    pub iterations: usize,
    pub min_width: usize,
    pub max_width: usize,
    pub sampling: WidthSampling,
}

impl Default for RandomSection {
    fn default() -> Self {
        let d = RandomSearchConfig::default();
        Self {
            iterations: d.iterations,
            min_width: d.min_width,
            max_width: d.max_width,
            sampling: d.sampling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nodes: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            nodes: vec![16, 32, 64, 128, 256],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub seeds: usize,
    pub threshold: Option<f64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            seeds: 20,
            threshold: Some(0.9825),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Multiplier on each cell's std; 0 makes evaluations deterministic.
    pub noise_scale: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { noise_scale: 1.0 }
    }
}

/// Everything one CLI invocation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub backend: Backend,
    pub budget: BudgetPreset,
    /// Hidden layers of the searched classifier (2 or 3).
    pub depth: usize,
    pub seed: u64,
    /// Trials per evaluation; see [`RunConfig::trials_per_eval`].
    pub trials: Option<usize>,
    pub out: PathBuf,
    pub dataset: DatasetSection,
    pub search: SearchSection,
    pub random: RandomSection,
    pub grid: GridSection,
    pub compare: CompareSection,
    pub oracle: OracleSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: None,
            backend: Backend::default(),
            budget: BudgetPreset::default(),
            depth: 2,
            seed: 0,
            trials: None,
            out: PathBuf::from("out"),
            dataset: DatasetSection::default(),
            search: SearchSection::default(),
            random: RandomSection::default(),
            grid: GridSection::default(),
            compare: CompareSection::default(),
            oracle: OracleSection::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML text; unknown keys are rejected by name.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Trials per evaluation: `trials` if set, else 10 on the oracle and the
    /// budget preset's count on the real trainer.
    pub fn trials_per_eval(&self) -> usize {
        self.trials.unwrap_or(match self.backend {
            Backend::Oracle => crate::dataset::ACCURACIES_PER_RECORD,
            Backend::Real => self.budget.eval_budget().trials,
        })
    }

    pub fn eval_budget(&self) -> EvalBudget {
        EvalBudget {
            trials: self.trials_per_eval(),
            ..self.budget.eval_budget()
        }
    }

    pub fn loop_config(&self) -> LoopConfig {
        let s = &self.search;
        LoopConfig {
            max_iterations: s.max_iterations,
            target_mean_accuracy: s.target_mean_accuracy,
            trials_per_eval: self.trials_per_eval(),
            augment: AugmentConfig {
                target_size: s.augment_size,
                ..AugmentConfig::default()
            },
            asnn: AsnnConfig {
                hidden_widths: s.asnn.hidden_widths.clone(),
                epochs: s.asnn.epochs,
                batch_size: s.asnn.batch_size,
                learning_rate: s.asnn.learning_rate,
                seed: self.seed,
            },
            bounds: s.bounds,
            policy: s.policy,
            seed: self.seed,
        }
    }

    pub fn random_config(&self, iterations: usize) -> RandomSearchConfig {
        RandomSearchConfig {
            iterations,
            trials_per_eval: self.trials_per_eval(),
            depth: self.depth,
            min_width: self.random.min_width,
            max_width: self.random.max_width,
            sampling: self.random.sampling,
            seed: self.seed,
        }
    }

    /// Checks cross-field constraints for the resolved `mode`.
    pub fn validate(&self) -> Result<()> {
        let mode = self
            .mode
            .ok_or_else(|| Error::Config("missing required field `mode`".into()))?;
        if !(2..=3).contains(&self.depth) {
            return Err(Error::Config(format!(
                "depth must be 2 or 3, got {}",
                self.depth
            )));
        }
        if self.trials == Some(0) {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.dataset.mnist_dir.is_some() && self.dataset.synthetic.is_some() {
            return Err(Error::Config(
                "conflicting dataset sources: set either dataset.mnist_dir or dataset.synthetic"
                    .into(),
            ));
        }
        let needs_backend = !matches!(mode, Mode::VerifyTables);
        if needs_backend
            && self.backend == Backend::Real
            && self.dataset.mnist_dir.is_none()
            && self.dataset.synthetic.is_none()
        {
            return Err(Error::Config(
                "backend `real` needs dataset.mnist_dir or dataset.synthetic".into(),
            ));
        }
        if !(self.oracle.noise_scale.is_finite() && self.oracle.noise_scale >= 0.0) {
            return Err(Error::Config(
                "oracle.noise_scale must be finite and >= 0".into(),
            ));
        }
        if self.grid.nodes.is_empty() {
            return Err(Error::Config("grid.nodes must not be empty".into()));
        }
        match mode {
            Mode::SearchAsnn | Mode::Compare => self.loop_config().validate()?,
            _ => {}
        }
        match mode {
            Mode::SearchRandom => self.random_config(self.random.iterations).validate()?,
            Mode::Compare => {
                self.random_config(self.search.max_iterations).validate()?;
                if self.compare.seeds == 0 {
                    return Err(Error::Config("compare.seeds must be >= 1".into()));
                }
                if self.search.target_mean_accuracy.is_some() {
                    return Err(Error::Config(
                        "compare needs a fixed budget; unset search.target_mean_accuracy".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}
