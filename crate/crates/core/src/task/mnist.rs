//! IDX (MNIST) reader. Files may be raw or gzip-compressed; compression is
//! detected from the gzip magic bytes, not the file extension.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use super::LabeledDataset;
use crate::nn::Matrix;
use crate::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnistPaths {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl MnistPaths {
    /// Standard file names inside `dir`, preferring the uncompressed variant when both exist.
    pub fn in_dir(dir: &Path) -> Self {
        let pick = |stem: &str| {
            let raw = dir.join(stem);
            if raw.exists() {
                raw
            } else {
                dir.join(format!("{stem}.gz"))
            }
        };
        Self {
            train_images: pick("train-images-idx3-ubyte"),
            train_labels: pick("train-labels-idx1-ubyte"),
            test_images: pick("t10k-images-idx3-ubyte"),
            test_labels: pick("t10k-labels-idx1-ubyte"),
        }
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Data(format!("{}: bad gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Data(format!("{}: truncated header", path.display())))
}

fn check_magic(found: u32, expected: u32, path: &Path) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    let kind = match found {
        IMAGES_MAGIC => " (an image file)",
        LABELS_MAGIC => " (a label file)",
        _ => "",
    };
    Err(Error::Data(format!(
        "{}: magic {found:#010x}{kind}, expected {expected:#010x}",
        path.display()
    )))
}

/// Returns `(count, rows * cols, pixels scaled to [0, 1])`.
fn parse_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    check_magic(be_u32(bytes, 0, path)?, IMAGES_MAGIC, path)?;
    let count = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    let pixels = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < pixels {
        return Err(Error::Data(format!(
            "{}: truncated, {} of {pixels} pixel bytes",
            path.display(),
            body.len()
        )));
    }
    let data = body[..pixels]
        .iter()
        .map(|&p| f64::from(p) / 255.0)
        .collect();
    Ok((count, rows * cols, data))
}

fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>> {
    check_magic(be_u32(bytes, 0, path)?, LABELS_MAGIC, path)?;
    let count = be_u32(bytes, 4, path)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::Data(format!(
            "{}: truncated, {} of {count} label bytes",
            path.display(),
            body.len()
        )));
    }
    Ok(body[..count].iter().map(|&l| usize::from(l)).collect())
}

fn load_split(images: &Path, labels: &Path) -> Result<(usize, Matrix, Vec<usize>)> {
    let (count, dim, pixels) = parse_images(&read_maybe_gz(images)?, images)?;
    let labels_v = parse_labels(&read_maybe_gz(labels)?, labels)?;
    if labels_v.len() != count {
        return Err(Error::Data(format!(
            "{} has {count} images but {} has {} labels",
            images.display(),
            labels.display(),
            labels_v.len()
        )));
    }
    Ok((dim, Matrix::from_vec(count, dim, pixels)?, labels_v))
}

/// Loads the four MNIST IDX files into a dataset with inputs in `[0, 1]`.
pub fn load_mnist_idx(paths: &MnistPaths) -> Result<LabeledDataset> {
    let (dim, train_inputs, train_labels) = load_split(&paths.train_images, &paths.train_labels)?;
    let (test_dim, test_inputs, test_labels) = load_split(&paths.test_images, &paths.test_labels)?;
    if dim != test_dim {
        return Err(Error::Data(format!(
            "train images have {dim} pixels, test images {test_dim}"
        )));
    }
    let num_classes = train_labels
        .iter()
        .chain(&test_labels)
        .max()
        .map_or(0, |&m| m + 1)
        .max(10);
    let ds = LabeledDataset {
        name: "mnist".into(),
        input_dim: dim,
        num_classes,
        train_inputs,
        train_labels,
        test_inputs,
        test_labels,
    };
    ds.validate()?;
    Ok(ds)
}
