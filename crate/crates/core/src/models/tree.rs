//! CART decision tree with Gini impurity and per-sample weights.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        distribution: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

fn gini(class_weights: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - class_weights.iter().map(|w| (w / total).powi(2)).sum::<f64>()
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    weights: &'a [f64],
    n_classes: usize,
    params: TreeParams,
}

impl Builder<'_> {
    fn class_weights(&self, samples: &[usize]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for &i in samples {
            acc[self.y[i]] += self.weights[i];
        }
        acc
    }

    /// Best threshold on one feature, scanning sorted values.
    fn scan_feature(
        &self,
        samples: &[usize],
        feature: usize,
        parent: &[f64],
        total: f64,
        parent_impurity: f64,
        order: &mut Vec<usize>,
    ) -> Option<BestSplit> {
        order.clear();
        order.extend_from_slice(samples);
        order.sort_by(|&a, &b| self.x.get(a, feature).total_cmp(&self.x.get(b, feature)));

        let mut left = vec![0.0; self.n_classes];
        let mut left_total = 0.0;
        let mut best: Option<BestSplit> = None;
        for k in 0..order.len() - 1 {
            let i = order[k];
            left[self.y[i]] += self.weights[i];
            left_total += self.weights[i];
            let here = self.x.get(i, feature);
            let next = self.x.get(order[k + 1], feature);
            if here == next {
                continue;
            }
            let right_total = total - left_total;
            let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
            let impurity = (left_total * gini(&left, left_total)
                + right_total * gini(&right, right_total))
                / total;
            let gain = parent_impurity - impurity;
            if best.as_ref().map_or(true, |b| gain > b.gain) {
                let mut threshold = 0.5 * (here + next);
                if threshold >= next {
                    threshold = here;
                }
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
        best
    }

    fn find_split(
        &self,
        samples: &[usize],
        parent: &[f64],
        rng: &mut impl Rng,
    ) -> Option<BestSplit> {
        let total: f64 = parent.iter().sum();
        let parent_impurity = gini(parent, total);
        let mut features: Vec<usize> = (0..self.x.cols()).collect();
        let quota = match self.params.max_features {
            Some(m) if m < features.len() => {
                features.shuffle(rng);
                m.max(1)
            }
            _ => features.len(),
        };
        let mut order = Vec::with_capacity(samples.len());
        let mut best: Option<BestSplit> = None;
        for (visited, &f) in features.iter().enumerate() {
            // keep looking past the quota until some valid split exists
            if visited >= quota && best.is_some() {
                break;
            }
            if let Some(s) = self.scan_feature(samples, f, parent, total, parent_impurity, &mut order) {
                if best.as_ref().map_or(true, |b| s.gain > b.gain) {
                    best = Some(s);
                }
            }
        }
        best
    }
}

impl DecisionTree {
    /// Grows a tree on rows with positive weight. Labels must be below
    /// `n_classes`.
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        weights: &[f64],
        n_classes: usize,
        params: TreeParams,
        rng: &mut impl Rng,
    ) -> Self {
        let builder = Builder {
            x,
            y,
            weights,
            n_classes,
            params,
        };
        let root: Vec<usize> = (0..x.rows()).filter(|&i| weights[i] > 0.0).collect();
        let mut nodes = vec![Node::Leaf {
            distribution: vec![0.0; n_classes],
        }];
        // (node slot, samples, depth)
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((slot, samples, depth)) = stack.pop() {
            let class_weights = builder.class_weights(&samples);
            let total: f64 = class_weights.iter().sum();
            let pure = class_weights.iter().filter(|&&w| w > 0.0).count() <= 1;
            let depth_reached = params.max_depth.is_some_and(|d| depth >= d);
            let split = if pure || depth_reached || samples.len() < params.min_samples_split {
                None
            } else {
                builder.find_split(&samples, &class_weights, rng)
            };
            match split {
                Some(s) => {
                    let (left, right): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&i| x.get(i, s.feature) <= s.threshold);
                    let left_slot = nodes.len();
                    let right_slot = left_slot + 1;
                    let empty = Node::Leaf {
                        distribution: Vec::new(),
                    };
                    nodes.push(empty.clone());
                    nodes.push(empty);
                    nodes[slot] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left: left_slot,
                        right: right_slot,
                    };
                    stack.push((right_slot, right, depth + 1));
                    stack.push((left_slot, left, depth + 1));
                }
                None => {
                    let distribution = if total > 0.0 {
                        class_weights.iter().map(|w| w / total).collect()
                    } else {
                        vec![1.0 / n_classes as f64; n_classes]
                    };
                    nodes[slot] = Node::Leaf { distribution };
                }
            }
        }
        DecisionTree { nodes }
    }

    /// Class distribution of the leaf reached by `row`.
    pub fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { distribution } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        super::argmax(self.leaf(row))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
