use serde::{Deserialize, Serialize};

use super::Matrix;

/// Brute-force k-nearest neighbours over the standardized training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    n_classes: usize,
    points: Matrix,
    labels: Vec<usize>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Self {
        Knn {
            k,
            n_classes,
            points: x.clone(),
            labels: y.to_vec(),
        }
    }

    /// Vote fractions of the k nearest points. Equidistant neighbours are
    /// ordered by lower class index, then by training position.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut neighbours: Vec<(f64, usize, usize)> = self
            .points
            .iter_rows()
            .enumerate()
            .map(|(i, p)| (squared_distance(p, row), self.labels[i], i))
            .collect();
        let k = self.k.min(neighbours.len());
        let by_rank = |a: &(f64, usize, usize), b: &(f64, usize, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        };
        if k < neighbours.len() {
            neighbours.select_nth_unstable_by(k, by_rank);
            neighbours.truncate(k);
        }
        let mut votes = vec![0.0; self.n_classes];
        for &(_, label, _) in &neighbours {
            votes[label] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= k as f64);
        votes
    }
}
