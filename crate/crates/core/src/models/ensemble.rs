//! Random forest, bagged trees and AdaBoost.M1 over decision stumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use super::{squash_and_normalize, Matrix};

fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64 + 1);
    rng
}

/// Bootstrap multiplicities for `n` rows.
fn bootstrap_weights(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for _ in 0..n {
        w[rng.random_range(0..n)] += 1.0;
    }
    w
}

fn grow_bootstrapped(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    n_trees: usize,
    params: TreeParams,
    seed: u64,
) -> Vec<DecisionTree> {
    (0..n_trees)
        .into_par_iter()
        .map(|m| {
            let mut rng = member_rng(seed, m);
            let weights = bootstrap_weights(x.rows(), &mut rng);
            DecisionTree::fit(x, y, &weights, n_classes, params, &mut rng)
        })
        .collect()
}

/// Gini trees on bootstrap samples with a random feature subset per split.
/// Probabilities average the leaf distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    n_classes: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        n_trees: usize,
        max_features: usize,
        seed: u64,
    ) -> Self {
        let params = TreeParams {
            max_features: Some(max_features),
            ..TreeParams::default()
        };
        RandomForest {
            n_classes,
            trees: grow_bootstrapped(x, y, n_classes, n_trees, params, seed),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.leaf(row)) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

/// Full CART trees on bootstrap samples, combined by majority vote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bagging {
    n_classes: usize,
    trees: Vec<DecisionTree>,
}

impl Bagging {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, n_trees: usize, seed: u64) -> Self {
        Bagging {
            n_classes,
            trees: grow_bootstrapped(x, y, n_classes, n_trees, TreeParams::default(), seed),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Fraction of trees voting for each class.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(row)] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        votes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedStump {
    pub tree: DecisionTree,
    pub alpha: f64,
}

/// AdaBoost.M1 with depth-one trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    n_classes: usize,
    stumps: Vec<WeightedStump>,
}

/// Cap on a single stump's weight, reached when it has zero training error.
const MAX_ALPHA: f64 = 20.0;

impl AdaBoost {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, rounds: usize, seed: u64) -> Self {
        let n = x.rows();
        let mut weights = vec![1.0 / n as f64; n];
        let mut stumps = Vec::with_capacity(rounds);
        let params = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };
        let mut rng = member_rng(seed, 0);
        for round in 0..rounds {
            let tree = DecisionTree::fit(x, y, &weights, n_classes, params, &mut rng);
            let wrong: Vec<bool> = x
                .iter_rows()
                .zip(y)
                .map(|(r, &label)| tree.predict(r) != label)
                .collect();
            let total: f64 = weights.iter().sum();
            let error: f64 = weights
                .iter()
                .zip(&wrong)
                .filter(|(_, &w)| w)
                .map(|(v, _)| v)
                .sum::<f64>()
                / total;
            if error >= 0.5 {
                if round == 0 {
                    stumps.push(WeightedStump { tree, alpha: 1.0 });
                }
                break;
            }
            if error <= 0.0 {
                stumps.push(WeightedStump { tree, alpha: MAX_ALPHA });
                break;
            }
            let alpha = ((1.0 - error) / error).ln().min(MAX_ALPHA);
            let boost = alpha.exp();
            for (w, &miss) in weights.iter_mut().zip(&wrong) {
                if miss {
                    *w *= boost;
                }
            }
            let sum: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= sum);
            stumps.push(WeightedStump { tree, alpha });
        }
        AdaBoost { n_classes, stumps }
    }

    pub fn rounds(&self) -> usize {
        self.stumps.len()
    }

    pub fn stumps(&self) -> &[WeightedStump] {
        &self.stumps
    }

    pub fn is_empty(&self) -> bool {
        self.stumps.is_empty()
    }

    fn votes(&self, row: &[f64], rounds: usize) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for s in &self.stumps[..rounds] {
            votes[s.tree.predict(row)] += s.alpha;
        }
        votes
    }

    /// Per-class margin: weight voting for the class minus weight against.
    pub fn margins(&self, row: &[f64]) -> Vec<f64> {
        let total: f64 = self.stumps.iter().map(|s| s.alpha).sum();
        self.votes(row, self.stumps.len())
            .into_iter()
            .map(|v| 2.0 * v - total)
            .collect()
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        squash_and_normalize(self.margins(row))
    }

    /// Training error of the weighted vote after each round.
    pub fn staged_errors(&self, x: &Matrix, y: &[usize]) -> Vec<f64> {
        (1..=self.stumps.len())
            .map(|r| {
                let wrong = x
                    .iter_rows()
                    .zip(y)
                    .filter(|(row, &label)| super::argmax(&self.votes(row, r)) != label)
                    .count();
                wrong as f64 / y.len() as f64
            })
            .collect()
    }
}
