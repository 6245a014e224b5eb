//! The ASNN regressor: scaled accuracy vector in, real-valued widths out.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{AsnnSample, ACCURACIES_PER_RECORD, INPUT_SCALE};
use crate::nn::{
    forward, init_params, loss, train_from, Activation, AdamConfig, Matrix, Mode, NetworkParams,
    NetworkSpec, OutputHead, Targets, TrainSettings,
};
use crate::rng::{derive_seed, streams};
use crate::task::{Architecture, MAX_WIDTH};
use crate::{Error, Result};

/// Fewest samples `train_asnn` accepts.
pub const MIN_TRAINING_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsnnConfig {
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for AsnnConfig {
    fn default() -> Self {
        Self {
            hidden_widths: vec![64, 64],
            epochs: 200,
            batch_size: 64,
            learning_rate: 0.001,
            seed: 0,
        }
    }
}

/// Input fed to the ASNN, already on the ×100 scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryVector(pub [f64; ACCURACIES_PER_RECORD]);

impl QueryVector {
    /// Perfect accuracy on every trial: `(100, ..., 100)`.
    pub fn canonical() -> Self {
        Self([INPUT_SCALE; ACCURACIES_PER_RECORD])
    }
}

/// Unrounded widths predicted by the ASNN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealArchPrediction(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WidthBounds {
    pub min: usize,
    pub max: usize,
}

impl Default for WidthBounds {
    fn default() -> Self {
        Self {
            min: 1,
            max: MAX_WIDTH,
        }
    }
}

impl WidthBounds {
    pub fn validate(&self) -> Result<()> {
        if self.min < 1 || self.min > self.max || self.max > MAX_WIDTH {
            return Err(Error::InvalidArgument(format!(
                "width bounds [{}, {}] must satisfy 1 <= min <= max <= {MAX_WIDTH}",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// A quantized prediction, noting whether any component had to be clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub arch: Architecture,
    pub clamped: bool,
}

/// Rounds each width half away from zero, then clamps into `bounds`.
pub fn quantize(pred: &RealArchPrediction, bounds: WidthBounds) -> Result<Quantized> {
    bounds.validate()?;
    if let Some(v) = pred.0.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite predicted width {v}"
        )));
    }
    let mut clamped = false;
    let widths = pred
        .0
        .iter()
        .map(|&v| {
            let r = v.round();
            let c = r.clamp(bounds.min as f64, bounds.max as f64);
            clamped |= c != r;
            c as usize
        })
        .collect();
    Ok(Quantized {
        arch: Architecture::new(widths)?,
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsnnModel {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    /// Eval-mode MSE on the training samples before and after training.
    pub initial_loss: f64,
    pub final_loss: f64,
}

fn samples_to_matrices(samples: &[AsnnSample]) -> Result<(Matrix, Matrix)> {
    let depth = samples[0].target.len();
    if let Some(s) = samples.iter().find(|s| s.target.len() != depth) {
        return Err(Error::InvalidArgument(format!(
            "inconsistent target dims: {} and {}",
            depth,
            s.target.len()
        )));
    }
    let inputs: Vec<&[f64]> = samples.iter().map(|s| s.input.as_slice()).collect();
    let targets: Vec<&[f64]> = samples.iter().map(|s| s.target.as_slice()).collect();
    Ok((Matrix::from_rows(&inputs)?, Matrix::from_rows(&targets)?))
}

/// Fits an MSE regressor from scaled accuracies to widths.
pub fn train_asnn(samples: &[AsnnSample], cfg: &AsnnConfig) -> Result<AsnnModel> {
    if samples.len() < MIN_TRAINING_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "ASNN needs at least {MIN_TRAINING_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let (x, y) = samples_to_matrices(samples)?;
    let spec = NetworkSpec {
        input_dim: ACCURACIES_PER_RECORD,
        hidden_widths: cfg.hidden_widths.clone(),
        hidden_activation: Activation::Relu,
        dropout_rates: vec![0.0; cfg.hidden_widths.len()],
        output_dim: y.cols(),
        output_head: OutputHead::MeanSquaredError,
    };
    let params = init_params(&spec, derive_seed(cfg.seed, streams::INIT))?;
    let initial_loss = loss(&params, &spec, &x, Targets::Values(&y), Mode::Eval)?;
    let settings = TrainSettings {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.seed,
        shuffle_each_epoch: true,
    };
    let adam = AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let outcome = train_from(&spec, params, &x, Targets::Values(&y), &settings, adam)?;
    let final_loss = loss(&outcome.params, &spec, &x, Targets::Values(&y), Mode::Eval)?;
    Ok(AsnnModel {
        spec,
        params: outcome.params,
        initial_loss,
        final_loss,
    })
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"ASNNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

impl AsnnModel {
    pub fn depth(&self) -> usize {
        self.spec.output_dim
    }

    /// One eval-mode forward pass on `query` (already ×100 scaled).
    pub fn predict(&self, query: &[f64]) -> Result<RealArchPrediction> {
        if query.len() != ACCURACIES_PER_RECORD {
            return Err(Error::InvalidArgument(format!(
                "query has {} values, expected {ACCURACIES_PER_RECORD}",
                query.len()
            )));
        }
        let x = Matrix::from_vec(1, query.len(), query.to_vec())?;
        let (out, _) = forward(&self.params, &self.spec, &x, Mode::Eval)?;
        Ok(RealArchPrediction(out.into_vec()))
    }

    pub fn predict_canonical(&self) -> Result<RealArchPrediction> {
        self.predict(&QueryVector::canonical().0)
    }

    /// Binary checkpoint, all integers and floats little-endian:
    ///
    /// ```text
    /// "ASNNCKPT" | version: u32 | spec_len: u32 | spec (JSON, UTF-8)
    /// | initial_loss: f64 | final_loss: f64 | n_params: u64 | params: f64 * n
    /// ```
    pub fn to_bytes(&self) -> Vec<u8> {
        let spec = serde_json::to_vec(&self.spec).expect("spec serializes");
        let flat = self.params.to_flat();
        let mut b = Vec::with_capacity(40 + spec.len() + 8 * flat.len());
        b.extend_from_slice(CHECKPOINT_MAGIC);
        b.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        b.extend_from_slice(&(spec.len() as u32).to_le_bytes());
        b.extend_from_slice(&spec);
        b.extend_from_slice(&self.initial_loss.to_le_bytes());
        b.extend_from_slice(&self.final_loss.to_le_bytes());
        b.extend_from_slice(&(flat.len() as u64).to_le_bytes());
        for v in flat {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::Data("not an ASNN checkpoint".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "checkpoint version {version}, this build reads {CHECKPOINT_VERSION}"
            )));
        }
        let spec_len = r.u32()? as usize;
        let spec: NetworkSpec = serde_json::from_slice(r.take(spec_len)?)
            .map_err(|e| Error::Data(format!("checkpoint spec: {e}")))?;
        spec.validate().map_err(|e| Error::Data(e.to_string()))?;
        let initial_loss = r.f64()?;
        let final_loss = r.f64()?;
        let n = usize::try_from(r.u64()?)
            .map_err(|_| Error::Data("parameter count overflow".into()))?;
        let flat = (0..n).map(|_| r.f64()).collect::<Result<Vec<f64>>>()?;
        if r.pos != bytes.len() {
            return Err(Error::Data("trailing bytes after checkpoint".into()));
        }
        let params =
            NetworkParams::from_flat(&spec, &flat).map_err(|e| Error::Data(e.to_string()))?;
        Ok(Self {
            spec,
            params,
            initial_loss,
            final_loss,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Data("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(v: &[f64]) -> RealArchPrediction {
        RealArchPrediction(v.to_vec())
    }

    #[test]
    fn rounding_half_away_from_zero() {
        let q = quantize(&pred(&[447.6, 64.5]), WidthBounds::default()).unwrap();
        assert_eq!(q.arch.widths(), &[448, 65]);
        assert!(!q.clamped);
        let q = quantize(&pred(&[339.4, 183.9, 66.2]), WidthBounds::default()).unwrap();
        assert_eq!(q.arch.widths(), &[339, 184, 66]);
    }

    #[test]
    fn clamps_into_bounds() {
        let q = quantize(&pred(&[-3.2, 20.0]), WidthBounds::default()).unwrap();
        assert_eq!(q.arch.widths(), &[1, 20]);
        assert!(q.clamped);
        let q = quantize(&pred(&[9000.0, 0.4]), WidthBounds::default()).unwrap();
        assert_eq!(q.arch.widths(), &[4096, 1]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(quantize(&pred(&[f64::NAN, 3.0]), WidthBounds::default()).is_err());
        assert!(quantize(&pred(&[f64::INFINITY, 3.0]), WidthBounds::default()).is_err());
        let bad = WidthBounds { min: 10, max: 5 };
        assert!(quantize(&pred(&[7.0, 7.0]), bad).is_err());
    }

    fn constant_samples(target: &[f64], n: usize) -> Vec<AsnnSample> {
        (0..n)
            .map(|i| AsnnSample {
                input: [100.0; ACCURACIES_PER_RECORD],
                target: target.to_vec(),
                source: i,
            })
            .collect()
    }

    fn quick_cfg() -> AsnnConfig {
        AsnnConfig {
            hidden_widths: vec![8],
            epochs: 3,
            ..AsnnConfig::default()
        }
    }

    #[test]
    fn training_preconditions() {
        assert!(train_asnn(&constant_samples(&[16.0, 16.0], 99), &quick_cfg()).is_err());
        let mut s = constant_samples(&[16.0, 16.0], 120);
        s[5].target.push(3.0);
        assert!(train_asnn(&s, &quick_cfg()).is_err());
    }

    #[test]
    fn predict_checks_query_length() {
        let m = train_asnn(&constant_samples(&[16.0, 16.0], 100), &quick_cfg()).unwrap();
        assert!(m.predict(&[100.0; 9]).is_err());
        let a = m.predict_canonical().unwrap();
        assert_eq!(a, m.predict_canonical().unwrap());
        assert_eq!(a.0.len(), 2);
    }

    #[test]
    fn checkpoint_round_trip_and_version_check() {
        let m = train_asnn(&constant_samples(&[32.0, 16.0], 100), &quick_cfg()).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(AsnnModel::from_bytes(&bytes).unwrap(), m);

        let mut wrong_version = bytes.clone();
        wrong_version[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(AsnnModel::from_bytes(&wrong_version)
            .unwrap_err()
            .to_string()
            .contains("version"));

        assert!(AsnnModel::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(AsnnModel::from_bytes(b"NOTACKPT").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("asnn.ckpt");
        m.save(&path).unwrap();
        assert_eq!(AsnnModel::load(&path).unwrap(), m);
    }
}
