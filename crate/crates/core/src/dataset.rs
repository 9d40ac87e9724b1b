//! Labeled feature matrices built from a corpus.
//!
//! The influence column (SNF4) depends on a median taken over the training
//! split, so the dataset keeps each row's raw influence score and refills
//! the column whenever a new split is fitted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassMode, Corpus, LabelMap};
use crate::features::{extract_all, feature_names, ExtractionConfig, FeatureError, INFLUENCE_FALLBACK, INFLUENCE_INDEX};
use crate::models::{self, Matrix, ModelError, ModelSpec, TrainedModel};
use crate::stats::median;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub user_ids: Vec<String>,
    pub features: Matrix,
    pub feature_names: Vec<String>,
    /// Raw influence score per row, before imputation.
    pub influence: Vec<Option<f64>>,
    /// Column holding the influence feature, if it was kept.
    pub influence_column: Option<usize>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
    pub mode: ClassMode,
}

impl LabeledDataset {
    /// Extracts features for every labeled user, in corpus order. The
    /// influence column is filled with the median over all labeled users.
    pub fn build(corpus: &Corpus, labels: &LabelMap, mode: ClassMode) -> Result<Self, FeatureError> {
        let cfg = ExtractionConfig::new(corpus.snapshot_time());
        Self::build_with(corpus, labels, mode, &cfg)
    }

    pub fn build_with(
        corpus: &Corpus,
        labels: &LabelMap,
        mode: ClassMode,
        cfg: &ExtractionConfig,
    ) -> Result<Self, FeatureError> {
        let labeled: Vec<_> = corpus
            .records()
            .iter()
            .filter_map(|r| labels.get(r.user_id()).map(|c| (r, c)))
            .collect();
        let rows = labeled
            .par_iter()
            .map(|(r, _)| extract_all(r, cfg, INFLUENCE_FALLBACK).map(|v| v.values().to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        let features = Matrix::from_rows(&rows).expect("feature rows share one width");
        let mut dataset = LabeledDataset {
            user_ids: labeled.iter().map(|(r, _)| r.user_id().to_string()).collect(),
            features,
            feature_names: feature_names(),
            influence: labeled.iter().map(|(r, _)| r.influence_score).collect(),
            influence_column: Some(INFLUENCE_INDEX),
            labels: labeled.iter().map(|(_, c)| c.index(mode)).collect(),
            classes: mode.class_names(),
            mode,
        };
        let all: Vec<usize> = (0..dataset.len()).collect();
        let m = dataset.influence_median(&all);
        dataset.impute_influence(m);
        Ok(dataset)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Median of the observed influence scores over `rows`.
    pub fn influence_median(&self, rows: &[usize]) -> f64 {
        let observed: Vec<f64> = rows.iter().filter_map(|&i| self.influence[i]).collect();
        median(&observed).unwrap_or(INFLUENCE_FALLBACK)
    }

    /// Writes `value` into the influence column of rows lacking a score.
    pub fn impute_influence(&mut self, value: f64) {
        let Some(col) = self.influence_column else {
            return;
        };
        for (i, raw) in self.influence.iter().enumerate() {
            self.features.set(i, col, raw.unwrap_or(value));
        }
    }

    pub fn subset(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            user_ids: rows.iter().map(|&i| self.user_ids[i].clone()).collect(),
            features: self.features.select_rows(rows),
            feature_names: self.feature_names.clone(),
            influence: rows.iter().map(|&i| self.influence[i]).collect(),
            influence_column: self.influence_column,
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
            mode: self.mode,
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_cols(columns),
            feature_names: columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
            influence_column: self
                .influence_column
                .and_then(|c| columns.iter().position(|&j| j == c)),
            ..self.clone()
        }
    }

    /// Collapses a four-class dataset onto genuine vs customer.
    pub fn to_binary(&self) -> LabeledDataset {
        if self.mode == ClassMode::Binary {
            return self.clone();
        }
        LabeledDataset {
            labels: self.labels.iter().map(|&l| usize::from(l != 0)).collect(),
            classes: ClassMode::Binary.class_names(),
            mode: ClassMode::Binary,
            ..self.clone()
        }
    }
}

/// Trains on the whole dataset, imputing influence from its own median and
/// storing that median with the model.
pub fn fit(spec: &ModelSpec, dataset: &LabeledDataset) -> Result<TrainedModel, ModelError> {
    let all: Vec<usize> = (0..dataset.len()).collect();
    fit_rows(spec, dataset, &all)
}

/// Trains on `rows` only. Influence imputation uses those rows' median.
pub fn fit_rows(spec: &ModelSpec, dataset: &LabeledDataset, rows: &[usize]) -> Result<TrainedModel, ModelError> {
    let mut train = dataset.subset(rows);
    let imputed = dataset.influence_median(rows);
    train.impute_influence(imputed);
    let mut spec = spec.clone();
    spec.class_mode = dataset.mode;
    Ok(models::train(&spec, &train.features, &train.labels, &train.classes)?.with_imputed_influence(imputed))
}
