use serde::{Deserialize, Serialize};

use super::{softmax_in_place, Matrix};
use crate::stats::Moments;

/// Gaussian naive Bayes. Classes absent from training get zero probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Log prior per class; `None` for classes unseen in training.
    log_priors: Vec<Option<f64>>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl GaussianNb {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, var_floor: f64) -> Self {
        let n = y.len() as f64;
        let mut log_priors = Vec::with_capacity(n_classes);
        let mut means = Vec::with_capacity(n_classes);
        let mut variances = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            let rows: Vec<&[f64]> = x
                .iter_rows()
                .zip(y)
                .filter(|(_, &label)| label == c)
                .map(|(r, _)| r)
                .collect();
            log_priors.push((!rows.is_empty()).then(|| (rows.len() as f64 / n).ln()));
            let (m, v): (Vec<f64>, Vec<f64>) = (0..x.cols())
                .map(|j| {
                    let mom: Moments = rows.iter().map(|r| r[j]).collect();
                    (mom.mean(), mom.variance().max(var_floor))
                })
                .unzip();
            means.push(m);
            variances.push(v);
        }
        GaussianNb {
            log_priors,
            means,
            variances,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut scores: Vec<f64> = self
            .log_priors
            .iter()
            .enumerate()
            .map(|(c, prior)| match prior {
                None => f64::NEG_INFINITY,
                Some(lp) => {
                    let ll: f64 = row
                        .iter()
                        .zip(&self.means[c])
                        .zip(&self.variances[c])
                        .map(|((x, m), v)| {
                            -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v)
                        })
                        .sum();
                    lp + ll
                }
            })
            .collect();
        softmax_in_place(&mut scores);
        scores
    }
}
