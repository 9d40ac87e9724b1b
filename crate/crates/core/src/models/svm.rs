//! One-vs-rest linear SVM trained with stochastic subgradient steps on the
//! L2-regularized hinge loss (Pegasos schedule, step 1/(lambda t)).
//!
//! A constant feature carries the intercept and is regularized like the
//! rest. The returned weights are the average of the iterates over the
//! second half of training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{squash_and_normalize, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    /// One row of `n_features + 1` weights per class, intercept last.
    weights: Vec<Vec<f64>>,
}

fn margin(w: &[f64], row: &[f64]) -> f64 {
    let d = row.len();
    w[d] + w[..d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
}

fn fit_binary(x: &Matrix, targets: &[f64], params: SvmParams, seed: u64, stream: u64) -> Vec<f64> {
    let d = x.cols();
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let radius = 1.0 / params.lambda.sqrt();
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut averaged = 0usize;
    let total = params.epochs * n;
    let average_from = total / 2;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let row = x.row(i);
            let y = targets[i];
            let violated = y * margin(&w, row) < 1.0;
            let shrink = 1.0 - eta * params.lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if violated {
                for (wj, xj) in w[..d].iter_mut().zip(row) {
                    *wj += eta * y * xj;
                }
                w[d] += eta * y;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
            if t > average_from {
                averaged += 1;
                let k = averaged as f64;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) / k;
                }
            }
        }
    }
    if averaged == 0 {
        w
    } else {
        avg
    }
}

impl LinearSvm {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: SvmParams, seed: u64) -> Self {
        let weights = (0..n_classes)
            .map(|c| {
                let targets: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
                fit_binary(x, &targets, params, seed, c as u64)
            })
            .collect();
        LinearSvm { weights }
    }

    pub fn margins(&self, row: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| margin(w, row)).collect()
    }

    /// Logistic squashing of each class margin, renormalized.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        squash_and_normalize(self.margins(row))
    }
}
