use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Architecture, LabeledDataset};
use crate::nn::{
    evaluate_accuracy, train, Activation, AdamConfig, NetworkSpec, OutputHead, Targets,
    TrainSettings,
};
use crate::rng::{derive_seed, streams};
use crate::{Error, Result};

pub const DEFAULT_DROPOUT: f64 = 0.2;

/// `input -> [Dense(w, relu) -> Dropout(p)] per layer -> Dense(classes)` with a softmax head.
pub fn build_classifier_spec(
    arch: &Architecture,
    input_dim: usize,
    num_classes: usize,
    dropout: f64,
) -> Result<NetworkSpec> {
    let spec = NetworkSpec {
        input_dim,
        hidden_widths: arch.widths().to_vec(),
        hidden_activation: Activation::Relu,
        dropout_rates: vec![dropout; arch.depth()],
        output_dim: num_classes,
        output_head: OutputHead::SoftmaxCrossEntropy,
    };
    spec.validate()?;
    Ok(spec)
}

/// How much work one architecture evaluation gets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalBudget {
    pub trials: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub train_subset: Option<usize>,
    pub test_subset: Option<usize>,
}

impl EvalBudget {
    /// Full protocol: 10 trials of 50 epochs on the whole training set.
    pub fn paper() -> Self {
        Self {
            trials: 10,
            epochs: 50,
            batch_size: 32,
            dropout: DEFAULT_DROPOUT,
            train_subset: None,
            test_subset: None,
        }
    }

    /// CI-sized: 3 trials of 3 epochs on a 10k training subset.
    pub fn desk() -> Self {
        Self {
            trials: 3,
            epochs: 3,
            train_subset: Some(10_000),
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "trials, epochs and batch_size must be >= 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Accuracies of `K` independent trainings of one architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub architecture: Architecture,
    pub accuracies: Vec<f64>,
    pub mean: f64,
}

impl TrialResult {
    pub fn from_accuracies(architecture: Architecture, accuracies: Vec<f64>) -> Result<Self> {
        if accuracies.is_empty() {
            return Err(Error::InvalidArgument(
                "trial result needs >= 1 accuracy".into(),
            ));
        }
        if let Some(a) = accuracies.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidArgument(format!(
                "accuracy {a} outside [0, 1]"
            )));
        }
        let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
        Ok(Self {
            architecture,
            accuracies,
            mean,
        })
    }
}

fn check_budget_fits(budget: &EvalBudget, dataset: &LabeledDataset) -> Result<()> {
    budget.validate()?;
    for (name, subset, have) in [
        ("train", budget.train_subset, dataset.train_labels.len()),
        ("test", budget.test_subset, dataset.test_labels.len()),
    ] {
        if subset.is_some_and(|n| n > have) {
            return Err(Error::InvalidArgument(format!(
                "{name} subset {} larger than the {have} available samples",
                subset.unwrap_or_default()
            )));
        }
    }
    Ok(())
}

/// Trains `arch` `budget.trials` times and reports the test accuracies.
///
/// Trial `i` is seeded with `derive_seed(derive_seed(base_seed, TRIAL), i)`, so
/// trials are independent of each other and of execution order. The data
/// subset (if any) is drawn once from `base_seed` and shared by all trials.
pub fn run_trials(
    arch: &Architecture,
    dataset: &LabeledDataset,
    budget: &EvalBudget,
    base_seed: u64,
) -> Result<TrialResult> {
    check_budget_fits(budget, dataset)?;
    let data = if budget.train_subset.is_some() || budget.test_subset.is_some() {
        dataset.subset(
            budget.train_subset,
            budget.test_subset,
            derive_seed(base_seed, streams::SUBSET),
        )?
    } else {
        dataset.clone()
    };
    let spec = build_classifier_spec(arch, data.input_dim, data.num_classes, budget.dropout)?;
    let trial_base = derive_seed(base_seed, streams::TRIAL);
    let accuracies = (0..budget.trials)
        .into_par_iter()
        .map(|i| {
            let settings = TrainSettings {
                epochs: budget.epochs,
                batch_size: budget.batch_size,
                seed: derive_seed(trial_base, i as u64),
                shuffle_each_epoch: true,
            };
            let outcome = train(
                &spec,
                &data.train_inputs,
                Targets::Classes(&data.train_labels),
                &settings,
                AdamConfig::default(),
            )?;
            evaluate_accuracy(&outcome.params, &spec, &data.test_inputs, &data.test_labels)
        })
        .collect::<Result<Vec<f64>>>()?;
    TrialResult::from_accuracies(arch.clone(), accuracies)
}

/// Something that can score an architecture with `trials` accuracies.
pub trait Evaluator: Sync {
    fn evaluate(&self, arch: &Architecture, trials: usize, seed: u64) -> Result<TrialResult>;

    /// Noise-free expected mean accuracy, for backends that know it.
    fn expected_mean(&self, _arch: &Architecture) -> Option<f64> {
        None
    }

    /// Short label written into run logs.
    fn label(&self) -> &str;
}

/// Evaluates by actually training classifiers.
#[derive(Debug, Clone)]
pub struct RealTrainer {
    pub dataset: LabeledDataset,
    pub budget: EvalBudget,
}

impl Evaluator for RealTrainer {
    fn evaluate(&self, arch: &Architecture, trials: usize, seed: u64) -> Result<TrialResult> {
        let budget = EvalBudget {
            trials,
            ..self.budget.clone()
        };
        run_trials(arch, &self.dataset, &budget, seed)
    }

    fn label(&self) -> &str {
        "real"
    }
}

/// Every `depth`-tuple over `node_set`, widest first in lexicographic order
/// (`(256,256), (256,128), ..., (16,16)`).
pub fn grid_architectures(node_set: &[usize], depth: usize) -> Result<Vec<Architecture>> {
    if node_set.is_empty() {
        return Err(Error::InvalidArgument("empty node set".into()));
    }
    let mut nodes = node_set.to_vec();
    nodes.sort_unstable_by(|a, b| b.cmp(a));
    nodes.dedup();
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..depth {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                nodes.iter().map(move |&n| {
                    let mut next = prefix.clone();
                    next.push(n);
                    next
                })
            })
            .collect();
    }
    combos.into_iter().map(Architecture::new).collect()
}

/// Evaluates every grid cell. Cell `i` is seeded with `derive_seed(derive_seed(base_seed, CELL), i)`.
pub fn collect_grid(
    node_set: &[usize],
    depth: usize,
    evaluator: &dyn Evaluator,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialResult>> {
    let cell_base = derive_seed(base_seed, streams::CELL);
    grid_architectures(node_set, depth)?
        .iter()
        .enumerate()
        .map(|(i, arch)| evaluator.evaluate(arch, trials, derive_seed(cell_base, i as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{make_synthetic, SyntheticSpec};

    fn arch(w: &[usize]) -> Architecture {
        Architecture::new(w.to_vec()).unwrap()
    }

    #[test]
    fn classifier_spec_shapes() {
        let s = build_classifier_spec(&arch(&[256, 16]), 784, 10, DEFAULT_DROPOUT).unwrap();
        assert_eq!(s.hidden_widths, vec![256, 16]);
        assert_eq!(s.dropout_rates, vec![0.2, 0.2]);
        assert_eq!(s.output_head, OutputHead::SoftmaxCrossEntropy);
        let s = build_classifier_spec(&arch(&[128, 128, 16]), 784, 10, DEFAULT_DROPOUT).unwrap();
        assert_eq!(s.hidden_widths, vec![128, 128, 16]);
    }

    #[test]
    fn table_row_mean_recomputes() {
        let acc = vec![
            0.9835, 0.9834, 0.9836, 0.9837, 0.9823, 0.9824, 0.9843, 0.9830, 0.9825, 0.9823,
        ];
        let r = TrialResult::from_accuracies(arch(&[256, 16]), acc).unwrap();
        assert!((r.mean - 0.98310).abs() < 5e-6);
        let single = TrialResult::from_accuracies(arch(&[16, 16]), vec![0.5]).unwrap();
        assert_eq!(single.mean, 0.5);
    }

    #[test]
    fn grid_order_and_size() {
        let g = grid_architectures(&[16, 32, 64, 128, 256], 2).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], arch(&[256, 256]));
        assert_eq!(g[4], arch(&[256, 16]));
        assert_eq!(g[24], arch(&[16, 16]));
        assert_eq!(grid_architectures(&[16, 32, 64, 128], 3).unwrap().len(), 64);
        assert_eq!(grid_architectures(&[16], 2).unwrap(), vec![arch(&[16, 16])]);
        assert!(grid_architectures(&[], 2).is_err());
    }

    fn tiny_trainer() -> RealTrainer {
        let dataset = make_synthetic(&SyntheticSpec {
            seed: 1,
            classes: 3,
            dim: 6,
            n_train: 90,
            n_test: 30,
            margin: 8.0,
        })
        .unwrap();
        RealTrainer {
            dataset,
            budget: EvalBudget {
                trials: 3,
                epochs: 2,
                batch_size: 16,
                dropout: 0.2,
                train_subset: Some(60),
                test_subset: None,
            },
        }
    }

    #[test]
    fn trials_are_deterministic_and_bounded() {
        let t = tiny_trainer();
        let a = run_trials(&arch(&[8, 4]), &t.dataset, &t.budget, 11).unwrap();
        let b = run_trials(&arch(&[8, 4]), &t.dataset, &t.budget, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.accuracies.len(), 3);
        let (lo, hi) = a
            .accuracies
            .iter()
            .fold((1.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!(lo >= 0.0 && hi <= 1.0 && a.mean >= lo && a.mean <= hi);
    }

    #[test]
    fn trial_seeds_are_per_index() {
        // Trials 0..2 of a 3-trial run equal the first two of a 2-trial run.
        let t = tiny_trainer();
        let three = run_trials(&arch(&[8, 4]), &t.dataset, &t.budget, 5).unwrap();
        let two = EvalBudget {
            trials: 2,
            ..t.budget.clone()
        };
        let two = run_trials(&arch(&[8, 4]), &t.dataset, &two, 5).unwrap();
        assert_eq!(&three.accuracies[..2], two.accuracies.as_slice());
    }

    #[test]
    fn oversized_subset_rejected() {
        let t = tiny_trainer();
        let budget = EvalBudget {
            train_subset: Some(1000),
            ..t.budget.clone()
        };
        assert!(run_trials(&arch(&[8, 4]), &t.dataset, &budget, 0).is_err());
    }

    #[test]
    fn grid_over_real_trainer_covers_product_once() {
        let t = tiny_trainer();
        let results = collect_grid(&[4, 8], 2, &t, 1, 3).unwrap();
        let got: std::collections::BTreeSet<_> =
            results.iter().map(|r| r.architecture.clone()).collect();
        let want: std::collections::BTreeSet<_> = [[8, 8], [8, 4], [4, 8], [4, 4]]
            .iter()
            .map(|w| arch(w))
            .collect();
        assert_eq!(results.len(), 4);
        assert_eq!(got, want);
    }
}
