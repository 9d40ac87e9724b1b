//! The eight classifiers, all trained from scratch on standardized inputs.
//!
//! Every model returns a probability-like confidence vector per prediction.
//! Logistic regression and naive Bayes produce native probabilities; the
//! tree-based models report leaf or vote proportions; KNN reports neighbour
//! vote fractions; the SVM and AdaBoost squash per-class margins through a
//! logistic function and renormalize. The predicted label is the first
//! index of the largest confidence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ClassMode;
use crate::features::INFLUENCE_FALLBACK;

pub mod bayes;
pub mod ensemble;
mod io;
pub mod knn;
pub mod logistic;
mod matrix;
pub mod scaler;
pub mod svm;
pub mod tree;

pub use io::{load_model, read_model, save_model, write_model, MODEL_FORMAT, MODEL_VERSION};
pub use matrix::Matrix;
pub use scaler::Standardizer;

use bayes::GaussianNb;
use ensemble::{AdaBoost, Bagging, RandomForest};
use knn::Knn;
use logistic::{LogisticParams, LogisticRegression};
use svm::{LinearSvm, SvmParams};
use tree::{DecisionTree, TreeParams};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("label {label} outside the {n_classes}-class label space")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("training data contains non-finite values")]
    NonFinite,
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("model has no fitted parameters")]
    Unfitted,
    #[error("model file version {found} is not supported (this build reads up to {supported})")]
    Version { found: u32, supported: u32 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    Knn,
    LogisticRegression,
    NaiveBayes,
    LinearSvm,
    RandomForest,
    Bagging,
    Boosting,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::DecisionTree,
        ModelKind::Knn,
        ModelKind::LogisticRegression,
        ModelKind::NaiveBayes,
        ModelKind::LinearSvm,
        ModelKind::RandomForest,
        ModelKind::Bagging,
        ModelKind::Boosting,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "dt",
            ModelKind::Knn => "knn",
            ModelKind::LogisticRegression => "lr",
            ModelKind::NaiveBayes => "nb",
            ModelKind::LinearSvm => "svm",
            ModelKind::RandomForest => "rf",
            ModelKind::Bagging => "bagging",
            ModelKind::Boosting => "boosting",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "Decision Tree",
            ModelKind::Knn => "K-NN",
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::NaiveBayes => "Naive Bayes",
            ModelKind::LinearSvm => "SVM",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::Bagging => "Bagging",
            ModelKind::Boosting => "Boosting",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dt" | "tree" | "decision_tree" => ModelKind::DecisionTree,
            "knn" | "k_nn" => ModelKind::Knn,
            "lr" | "logistic" | "logistic_regression" => ModelKind::LogisticRegression,
            "nb" | "naive_bayes" => ModelKind::NaiveBayes,
            "svm" | "linear_svm" => ModelKind::LinearSvm,
            "rf" | "random_forest" => ModelKind::RandomForest,
            "bagging" => ModelKind::Bagging,
            "boosting" | "adaboost" => ModelKind::Boosting,
            _ => return Err(format!("unknown model kind {s:?}")),
        })
    }
}

/// Hyperparameters for every kind; each kind reads only its own fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub tree_min_samples_split: usize,
    pub tree_max_depth: Option<usize>,
    pub knn_k: usize,
    pub lr_lambda: f64,
    pub lr_tolerance: f64,
    pub lr_max_iterations: usize,
    pub nb_variance_floor: f64,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub forest_trees: usize,
    /// Features tried per split; defaults to the rounded square root of the
    /// input dimension.
    pub forest_max_features: Option<usize>,
    pub bagging_trees: usize,
    pub boosting_rounds: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            tree_min_samples_split: 2,
            tree_max_depth: None,
            knn_k: 5,
            lr_lambda: 1e-4,
            lr_tolerance: 1e-6,
            lr_max_iterations: 5000,
            nb_variance_floor: 1e-9,
            svm_lambda: 1e-4,
            svm_epochs: 30,
            forest_trees: 100,
            forest_max_features: None,
            bagging_trees: 50,
            boosting_rounds: 100,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: &str| Err(ModelError::Hyperparameter(msg.to_string()));
        if self.tree_min_samples_split < 2 {
            return fail("tree_min_samples_split must be at least 2");
        }
        if self.tree_max_depth == Some(0) {
            return fail("tree_max_depth must be positive");
        }
        if self.knn_k == 0 {
            return fail("knn_k must be positive");
        }
        if !(self.lr_lambda >= 0.0 && self.lr_lambda.is_finite()) {
            return fail("lr_lambda must be finite and non-negative");
        }
        if !(self.lr_tolerance > 0.0) {
            return fail("lr_tolerance must be positive");
        }
        if !(self.nb_variance_floor > 0.0) {
            return fail("nb_variance_floor must be positive");
        }
        if !(self.svm_lambda > 0.0 && self.svm_lambda.is_finite()) {
            return fail("svm_lambda must be positive");
        }
        if self.svm_epochs == 0 {
            return fail("svm_epochs must be positive");
        }
        if self.forest_trees == 0 || self.bagging_trees == 0 || self.boosting_rounds == 0 {
            return fail("ensemble sizes must be positive");
        }
        if self.forest_max_features == Some(0) {
            return fail("forest_max_features must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub class_mode: ClassMode,
    #[serde(default)]
    pub random_seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, class_mode: ClassMode, random_seed: u64) -> Self {
        ModelSpec {
            kind,
            hyperparameters: Hyperparameters::default(),
            class_mode,
            random_seed,
        }
    }
}

/// Learned parameters, per kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learned {
    DecisionTree(DecisionTree),
    Knn(Knn),
    LogisticRegression(LogisticRegression),
    NaiveBayes(GaussianNb),
    LinearSvm(LinearSvm),
    RandomForest(RandomForest),
    Bagging(Bagging),
    Boosting(AdaBoost),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub scaler: Standardizer,
    pub classes: Vec<String>,
    /// Influence score substituted for users without one.
    pub imputed_influence: f64,
    pub params: Learned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub confidences: Vec<f64>,
}

impl Prediction {
    pub fn confidence(&self) -> f64 {
        self.confidences[self.label]
    }
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    values.iter_mut().for_each(|v| *v /= sum);
}

/// `sigmoid(m_c) / sum_k sigmoid(m_k)`, evaluated in log space.
pub(crate) fn squash_and_normalize(margins: Vec<f64>) -> Vec<f64> {
    let mut log_sigmoid: Vec<f64> = margins
        .into_iter()
        .map(|m| if m >= 0.0 { -(-m).exp().ln_1p() } else { m - m.exp().ln_1p() })
        .collect();
    softmax_in_place(&mut log_sigmoid);
    log_sigmoid
}

fn validate_training(x: &Matrix, y: &[usize], n_classes: usize) -> Result<(), ModelError> {
    if x.rows() != y.len() {
        return Err(ModelError::Dimension {
            expected: x.rows(),
            found: y.len(),
        });
    }
    if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
        return Err(ModelError::LabelOutOfRange { label, n_classes });
    }
    let first = y.first().copied();
    if n_classes < 2 || y.iter().all(|&l| Some(l) == first) {
        return Err(ModelError::SingleClass);
    }
    if !x.is_finite() {
        return Err(ModelError::NonFinite);
    }
    Ok(())
}

/// Fits `spec` on `x` / `y`. Labels index into `classes`.
pub fn train(spec: &ModelSpec, x: &Matrix, y: &[usize], classes: &[String]) -> Result<TrainedModel, ModelError> {
    let n_classes = classes.len();
    validate_training(x, y, n_classes)?;
    let h = &spec.hyperparameters;
    h.validate()?;
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let seed = spec.random_seed;
    let params = match spec.kind {
        ModelKind::DecisionTree => {
            let weights = vec![1.0; y.len()];
            let tp = TreeParams {
                max_depth: h.tree_max_depth,
                min_samples_split: h.tree_min_samples_split,
                max_features: None,
            };
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            Learned::DecisionTree(DecisionTree::fit(&z, y, &weights, n_classes, tp, &mut rng))
        }
        ModelKind::Knn => Learned::Knn(Knn::fit(&z, y, n_classes, h.knn_k)),
        ModelKind::LogisticRegression => Learned::LogisticRegression(LogisticRegression::fit(
            &z,
            y,
            n_classes,
            LogisticParams {
                lambda: h.lr_lambda,
                tolerance: h.lr_tolerance,
                max_iterations: h.lr_max_iterations,
            },
        )),
        ModelKind::NaiveBayes => Learned::NaiveBayes(GaussianNb::fit(&z, y, n_classes, h.nb_variance_floor)),
        ModelKind::LinearSvm => Learned::LinearSvm(LinearSvm::fit(
            &z,
            y,
            n_classes,
            SvmParams {
                lambda: h.svm_lambda,
                epochs: h.svm_epochs,
            },
            seed,
        )),
        ModelKind::RandomForest => {
            let max_features = h
                .forest_max_features
                .unwrap_or_else(|| (x.cols() as f64).sqrt().round().max(1.0) as usize);
            Learned::RandomForest(RandomForest::fit(&z, y, n_classes, h.forest_trees, max_features, seed))
        }
        ModelKind::Bagging => Learned::Bagging(Bagging::fit(&z, y, n_classes, h.bagging_trees, seed)),
        ModelKind::Boosting => Learned::Boosting(AdaBoost::fit(&z, y, n_classes, h.boosting_rounds, seed)),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        scaler,
        classes: classes.to_vec(),
        imputed_influence: INFLUENCE_FALLBACK,
        params,
    })
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.scaler.dim()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn with_imputed_influence(mut self, value: f64) -> Self {
        self.imputed_influence = value;
        self
    }

    fn is_fitted(&self) -> bool {
        match &self.params {
            Learned::RandomForest(m) => !m.is_empty(),
            Learned::Bagging(m) => !m.is_empty(),
            Learned::Boosting(m) => !m.is_empty(),
            _ => true,
        }
    }

    /// Confidence vector over `classes` for one raw (unscaled) row.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>, ModelError> {
        if row.len() != self.n_features() {
            return Err(ModelError::Dimension {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        if !self.is_fitted() {
            return Err(ModelError::Unfitted);
        }
        let z = self.scaler.transform_row(row);
        Ok(match &self.params {
            Learned::DecisionTree(m) => m.leaf(&z).to_vec(),
            Learned::Knn(m) => m.predict_proba(&z),
            Learned::LogisticRegression(m) => m.predict_proba(&z),
            Learned::NaiveBayes(m) => m.predict_proba(&z),
            Learned::LinearSvm(m) => m.predict_proba(&z),
            Learned::RandomForest(m) => m.predict_proba(&z),
            Learned::Bagging(m) => m.predict_proba(&z),
            Learned::Boosting(m) => m.predict_proba(&z),
        })
    }

    pub fn predict(&self, row: &[f64]) -> Result<Prediction, ModelError> {
        let confidences = self.predict_proba(row)?;
        Ok(Prediction {
            label: argmax(&confidences),
            confidences,
        })
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<Prediction>, ModelError> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }
}
