//! Multinomial (softmax) logistic regression with L2 penalty, fitted by
//! full-batch gradient descent.
//!
//! Step sizes follow the Barzilai-Borwein rule and are cut back until the
//! Armijo sufficient-decrease condition holds, so every accepted step lowers
//! the objective. The intercepts are not penalized.

use serde::{Deserialize, Serialize};

use super::{softmax_in_place, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    n_classes: usize,
    n_features: usize,
    /// `n_classes` rows of `n_features + 1` values, intercept last.
    weights: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub lambda: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// Objective and gradient of the penalized mean cross-entropy.
pub struct Objective<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    lambda: f64,
}

impl<'a> Objective<'a> {
    pub fn new(x: &'a Matrix, y: &'a [usize], n_classes: usize, lambda: f64) -> Self {
        Objective {
            x,
            y,
            n_classes,
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_classes * (self.x.cols() + 1)
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        self.evaluate(w, None)
    }

    /// Returns the objective and writes the gradient into `grad`.
    pub fn value_and_gradient(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(w, Some(grad))
    }

    fn evaluate(&self, w: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let d = self.x.cols();
        let stride = d + 1;
        let n = self.x.rows() as f64;
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut loss = 0.0;
        let mut logits = vec![0.0; self.n_classes];
        for (row, &label) in self.x.iter_rows().zip(self.y) {
            for (c, z) in logits.iter_mut().enumerate() {
                let wc = &w[c * stride..(c + 1) * stride];
                *z = wc[d] + wc[..d].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            }
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let log_norm = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            loss += log_norm - logits[label];
            if let Some(g) = grad.as_deref_mut() {
                for c in 0..self.n_classes {
                    let p = (logits[c] - log_norm).exp();
                    let r = p - f64::from(u8::from(c == label));
                    let gc = &mut g[c * stride..(c + 1) * stride];
                    for (gj, xj) in gc[..d].iter_mut().zip(row) {
                        *gj += r * xj;
                    }
                    gc[d] += r;
                }
            }
        }
        loss /= n;
        let mut penalty = 0.0;
        for c in 0..self.n_classes {
            for j in 0..d {
                let v = w[c * stride + j];
                penalty += v * v;
            }
        }
        if let Some(g) = grad {
            for c in 0..self.n_classes {
                for j in 0..stride {
                    let k = c * stride + j;
                    g[k] /= n;
                    if j < d {
                        g[k] += self.lambda * w[k];
                    }
                }
            }
        }
        loss + 0.5 * self.lambda * penalty
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl LogisticRegression {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: LogisticParams) -> Self {
        let objective = Objective::new(x, y, n_classes, params.lambda);
        let dim = objective.dim();
        let mut w = vec![0.0; dim];
        let mut grad = vec![0.0; dim];
        let mut value = objective.value_and_gradient(&w, &mut grad);
        let mut step = 1.0;
        let mut trial = vec![0.0; dim];
        let mut trial_grad = vec![0.0; dim];
        let mut iterations = 0;
        let mut gnorm = norm(&grad);
        while gnorm >= params.tolerance && iterations < params.max_iterations {
            let g2 = gnorm * gnorm;
            let mut accepted = false;
            let mut trial_value = value;
            for _ in 0..60 {
                for k in 0..dim {
                    trial[k] = w[k] - step * grad[k];
                }
                trial_value = objective.value_and_gradient(&trial, &mut trial_grad);
                if trial_value <= value - 1e-4 * step * g2 {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            iterations += 1;
            if !accepted {
                break;
            }
            // Barzilai-Borwein step for the next iteration
            let (mut ss, mut sy) = (0.0, 0.0);
            for k in 0..dim {
                let s = trial[k] - w[k];
                let yk = trial_grad[k] - grad[k];
                ss += s * s;
                sy += s * yk;
            }
            step = if sy > 0.0 { (ss / sy).clamp(1e-10, 1e10) } else { step * 2.0 };
            std::mem::swap(&mut w, &mut trial);
            std::mem::swap(&mut grad, &mut trial_grad);
            value = trial_value;
            gnorm = norm(&grad);
        }
        LogisticRegression {
            n_classes,
            n_features: x.cols(),
            weights: w,
            iterations,
            gradient_norm: gnorm,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let stride = self.n_features + 1;
        let mut out: Vec<f64> = (0..self.n_classes)
            .map(|c| {
                let wc = &self.weights[c * stride..(c + 1) * stride];
                wc[self.n_features] + wc[..self.n_features].iter().zip(row).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        softmax_in_place(&mut out);
        out
    }
}
