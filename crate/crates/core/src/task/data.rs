use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Train/test split of a classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub input_dim: usize,
    pub num_classes: usize,
    pub train_inputs: Matrix,
    pub train_labels: Vec<usize>,
    pub test_inputs: Matrix,
    pub test_labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn validate(&self) -> Result<()> {
        for (split, x, y) in [
            ("train", &self.train_inputs, &self.train_labels),
            ("test", &self.test_inputs, &self.test_labels),
        ] {
            if x.rows() != y.len() {
                return Err(Error::Data(format!(
                    "{split}: {} inputs but {} labels",
                    x.rows(),
                    y.len()
                )));
            }
            if x.cols() != self.input_dim {
                return Err(Error::Data(format!(
                    "{split}: inputs have {} features, expected {}",
                    x.cols(),
                    self.input_dim
                )));
            }
            if let Some(l) = y.iter().find(|&&l| l >= self.num_classes) {
                return Err(Error::Data(format!(
                    "{split}: label {l} outside [0, {})",
                    self.num_classes
                )));
            }
        }
        Ok(())
    }

    /// Keeps the first `n_train` / `n_test` samples of each split after a seeded shuffle.
    pub fn subset(&self, n_train: Option<usize>, n_test: Option<usize>, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut pick = |x: &Matrix, y: &[usize], n: Option<usize>, split: &str| {
            let Some(n) = n else {
                return Ok((x.clone(), y.to_vec()));
            };
            if n == 0 || n > y.len() {
                return Err(Error::InvalidArgument(format!(
                    "{split} subset of {n} from {} samples",
                    y.len()
                )));
            }
            let mut idx: Vec<usize> = (0..y.len()).collect();
            idx.shuffle(&mut rng);
            idx.truncate(n);
            Ok((x.select_rows(&idx), idx.iter().map(|&i| y[i]).collect()))
        };
        let (train_inputs, train_labels) =
            pick(&self.train_inputs, &self.train_labels, n_train, "train")?;
        let (test_inputs, test_labels) =
            pick(&self.test_inputs, &self.test_labels, n_test, "test")?;
        Ok(Self {
            name: self.name.clone(),
            input_dim: self.input_dim,
            num_classes: self.num_classes,
            train_inputs,
            train_labels,
            test_inputs,
            test_labels,
        })
    }
}

/// Gaussian-blob classification problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub classes: usize,
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Expected distance between two class means, in units of the (unit) noise std.
    pub margin: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            classes: 10,
            dim: 64,
            n_train: 10_000,
            n_test: 2_000,
            margin: 6.0,
        }
    }
}

/// Samples `x = mu_c + N(0, I)` with labels cycling through the classes.
///
/// Class means are `N(0, I) * margin / sqrt(2 dim)`, so two means sit about
/// `margin` apart.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    if spec.classes < 2 {
        return Err(Error::InvalidArgument("need at least 2 classes".into()));
    }
    if spec.dim == 0 || spec.n_train == 0 || spec.n_test == 0 {
        return Err(Error::InvalidArgument(
            "dim, n_train and n_test must be >= 1".into(),
        ));
    }
    if !(spec.margin >= 0.0 && spec.margin.is_finite()) {
        return Err(Error::InvalidArgument(
            "margin must be finite and >= 0".into(),
        ));
    }
    let mut rng = rng_from_seed(spec.seed);
    let scale = spec.margin / (2.0 * spec.dim as f64).sqrt();
    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..spec.dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect()
        })
        .collect();
    let mut draw = |n: usize| -> Result<(Matrix, Vec<usize>)> {
        let mut data = Vec::with_capacity(n * spec.dim);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % spec.classes;
            labels.push(c);
            for mu in &means[c] {
                let noise: f64 = StandardNormal.sample(&mut rng);
                data.push(mu + noise);
            }
        }
        Ok((Matrix::from_vec(n, spec.dim, data)?, labels))
    };
    let (train_inputs, train_labels) = draw(spec.n_train)?;
    let (test_inputs, test_labels) = draw(spec.n_test)?;
    Ok(LabeledDataset {
        name: format!(
            "synthetic-{}c-{}d-seed{}",
            spec.classes, spec.dim, spec.seed
        ),
        input_dim: spec.dim,
        num_classes: spec.classes,
        train_inputs,
        train_labels,
        test_inputs,
        test_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            seed: 3,
            classes: 4,
            dim: 8,
            n_train: 40,
            n_test: 12,
            margin: 5.0,
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = make_synthetic(&small()).unwrap();
        assert_eq!(a, make_synthetic(&small()).unwrap());
        let b = make_synthetic(&SyntheticSpec { seed: 4, ..small() }).unwrap();
        assert_ne!(a.train_inputs, b.train_inputs);
        a.validate().unwrap();
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(make_synthetic(&SyntheticSpec {
            n_train: 0,
            ..small()
        })
        .is_err());
        assert!(make_synthetic(&SyntheticSpec {
            classes: 1,
            ..small()
        })
        .is_err());
    }

    #[test]
    fn subset_sizes_and_determinism() {
        let d = make_synthetic(&small()).unwrap();
        let s = d.subset(Some(10), None, 1).unwrap();
        assert_eq!(s.train_labels.len(), 10);
        assert_eq!(s.test_labels.len(), 12);
        assert_eq!(s, d.subset(Some(10), None, 1).unwrap());
        assert!(d.subset(Some(41), None, 1).is_err());
    }
}
