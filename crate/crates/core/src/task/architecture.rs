use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_WIDTH: usize = 4096;

/// Hidden-layer widths of a 2- or 3-layer classifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Architecture(Vec<usize>);

impl Architecture {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if !(2..=3).contains(&widths.len()) {
            return Err(Error::InvalidArgument(format!(
                "architecture depth must be 2 or 3, got {}",
                widths.len()
            )));
        }
        if let Some(w) = widths.iter().find(|w| !(1..=MAX_WIDTH).contains(*w)) {
            return Err(Error::InvalidArgument(format!(
                "layer width {w} outside 1..={MAX_WIDTH}"
            )));
        }
        Ok(Self(widths))
    }

    pub fn widths(&self) -> &[usize] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<usize>> for Architecture {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Architecture> for Vec<usize> {
    fn from(a: Architecture) -> Self {
        a.0
    }
}

/// Formats as `256x16`.
impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}
