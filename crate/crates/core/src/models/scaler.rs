use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::stats::Moments;

/// Per-feature standardization fitted on a training split. Constant
/// features keep a unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const CONSTANT_TOLERANCE: f64 = 1e-12;

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let (mean, std) = (0..x.cols())
            .map(|j| {
                let m: Moments = x.iter_rows().map(|r| r[j]).collect();
                let sd = m.std_dev();
                (m.mean(), if sd > CONSTANT_TOLERANCE { sd } else { 1.0 })
            })
            .unzip();
        Standardizer { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }
}
