use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension affine standardization `(x - mean) / dev`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub means: Vec<f64>,
    pub devs: Vec<f64>,
}

impl Scaling {
    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            devs: vec![1.0; dim],
        }
    }

    /// Population mean and deviation of each column. Constant columns get
    /// deviation 1 so they map to zero instead of dividing by zero.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let dim = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let n = rows.len() as f64;
        let means: Vec<f64> = (0..dim)
            .map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n)
            .collect();
        let devs = (0..dim)
            .map(|d| {
                let var = rows.iter().map(|r| (r[d] - means[d]).powi(2)).sum::<f64>() / n;
                let dev = var.sqrt();
                if dev > 0.0 && dev.is_finite() {
                    dev
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { means, devs })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x
            .iter()
            .zip(self.means.iter().zip(&self.devs))
            .map(|(v, (m, d))| (v - m) / d)
            .collect())
    }
}
