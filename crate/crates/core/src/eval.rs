//! Stratified k-fold cross-validation and classification metrics.
//!
//! Micro averages pool true/false positive counts over all classes; macro
//! averages take the unweighted mean of the per-class one-vs-rest values.
//! ROC-AUC is the Mann-Whitney rank statistic with average ranks for ties.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{fit_rows, LabeledDataset};
use crate::features::{Family, FEATURE_COUNT};
use crate::models::{ModelError, ModelKind, ModelSpec};
use crate::stats::average_ranks;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot split {n} samples into {k} folds")]
    TooFewSamples { n: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("rank correlation undefined: zero rank variance")]
    ZeroVariance,
    #[error("need at least two points, got {0}")]
    TooShort(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Splits sample indices into `k` folds, stratified by label. Fold sizes
/// differ by at most one, and so do the per-class counts within each fold.
pub fn kfold_split(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    let n = labels.len();
    if k < 2 {
        return Err(EvalError::InvalidK(k));
    }
    if n < k {
        return Err(EvalError::TooFewSamples { n, k });
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ordered = Vec::with_capacity(n);
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        ordered.extend(members);
    }
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in ordered.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Area under the ROC curve; `None` unless both outcomes are present.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<String>,
    pub accuracy: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub micro_auc: Option<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_auc: Option<f64>,
    pub per_class_precision: Vec<f64>,
    pub per_class_recall: Vec<f64>,
    pub per_class_f1: Vec<f64>,
    pub per_class_auc: Vec<Option<f64>>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
    pub folds: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn f1(p: f64, r: f64) -> f64 {
    ratio(2.0 * p * r, p + r)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    (!defined.is_empty()).then(|| mean(&defined))
}

/// Metrics for one set of predictions. `scores[i]` is the confidence row
/// for sample `i` over `classes`.
pub fn metrics(
    y_true: &[usize],
    y_pred: &[usize],
    scores: &[Vec<f64>],
    classes: &[String],
) -> Result<MetricsReport, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::Length(y_true.len(), y_pred.len()));
    }
    if y_true.len() != scores.len() {
        return Err(EvalError::Length(y_true.len(), scores.len()));
    }
    let k = classes.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t][p] += 1;
    }
    let mut precision = Vec::with_capacity(k);
    let mut recall = Vec::with_capacity(k);
    let mut f1s = Vec::with_capacity(k);
    let (mut tp_sum, mut fp_sum, mut fn_sum) = (0.0, 0.0, 0.0);
    for c in 0..k {
        let tp = confusion[c][c] as f64;
        let fp = (0..k).filter(|&r| r != c).map(|r| confusion[r][c] as f64).sum::<f64>();
        let fn_ = (0..k).filter(|&p| p != c).map(|p| confusion[c][p] as f64).sum::<f64>();
        tp_sum += tp;
        fp_sum += fp;
        fn_sum += fn_;
        let p = ratio(tp, tp + fp);
        let r = ratio(tp, tp + fn_);
        precision.push(p);
        recall.push(r);
        f1s.push(f1(p, r));
    }
    let micro_p = ratio(tp_sum, tp_sum + fp_sum);
    let micro_r = ratio(tp_sum, tp_sum + fn_sum);

    let mut per_class_auc = Vec::with_capacity(k);
    for c in 0..k {
        let s: Vec<f64> = scores.iter().map(|row| row[c]).collect();
        let pos: Vec<bool> = y_true.iter().map(|&t| t == c).collect();
        let auc = roc_auc(&s, &pos);
        if auc.is_none() {
            log::warn!("class {:?}: AUC undefined on this split, left out of the macro mean", classes[c]);
        }
        per_class_auc.push(auc);
    }
    let flat_scores: Vec<f64> = scores.iter().flat_map(|row| row.iter().copied()).collect();
    let flat_pos: Vec<bool> = y_true.iter().flat_map(|&t| (0..k).map(move |c| c == t)).collect();

    Ok(MetricsReport {
        classes: classes.to_vec(),
        accuracy: ratio(tp_sum, y_true.len() as f64),
        micro_precision: micro_p,
        micro_recall: micro_r,
        micro_f1: f1(micro_p, micro_r),
        micro_auc: roc_auc(&flat_scores, &flat_pos),
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1s),
        macro_auc: mean_defined(&per_class_auc),
        per_class_precision: precision,
        per_class_recall: recall,
        per_class_f1: f1s,
        per_class_auc,
        confusion,
        folds: 1,
    })
}

/// Averages per-fold reports; confusion matrices are summed.
pub fn average_reports(reports: &[MetricsReport]) -> MetricsReport {
    let avg = |f: fn(&MetricsReport) -> f64| mean(&reports.iter().map(f).collect::<Vec<_>>());
    let avg_opt = |f: fn(&MetricsReport) -> Option<f64>| mean_defined(&reports.iter().map(f).collect::<Vec<_>>());
    let k = reports[0].classes.len();
    let per_class = |f: fn(&MetricsReport) -> &Vec<f64>| -> Vec<f64> {
        (0..k).map(|c| mean(&reports.iter().map(|r| f(r)[c]).collect::<Vec<_>>())).collect()
    };
    let per_class_auc: Vec<Option<f64>> = (0..k)
        .map(|c| mean_defined(&reports.iter().map(|r| r.per_class_auc[c]).collect::<Vec<_>>()))
        .collect();
    let mut confusion = vec![vec![0u64; k]; k];
    for r in reports {
        for (row, src) in confusion.iter_mut().zip(&r.confusion) {
            for (a, b) in row.iter_mut().zip(src) {
                *a += b;
            }
        }
    }
    MetricsReport {
        classes: reports[0].classes.clone(),
        accuracy: avg(|r| r.accuracy),
        micro_precision: avg(|r| r.micro_precision),
        micro_recall: avg(|r| r.micro_recall),
        micro_f1: avg(|r| r.micro_f1),
        micro_auc: avg_opt(|r| r.micro_auc),
        macro_precision: avg(|r| r.macro_precision),
        macro_recall: avg(|r| r.macro_recall),
        macro_f1: avg(|r| r.macro_f1),
        macro_auc: avg_opt(|r| r.macro_auc),
        per_class_precision: per_class(|r| &r.per_class_precision),
        per_class_recall: per_class(|r| &r.per_class_recall),
        per_class_f1: per_class(|r| &r.per_class_f1),
        per_class_auc,
        confusion,
        folds: reports.iter().map(|r| r.folds).sum(),
    }
}

/// Stratified k-fold cross-validation of `spec` on `dataset`. Scaling and
/// influence imputation are fitted on each training fold alone. Folds are
/// drawn with the spec's seed.
pub fn cross_validate(spec: &ModelSpec, dataset: &LabeledDataset, k: usize) -> Result<MetricsReport, EvalError> {
    let folds = kfold_split(&dataset.labels, k, spec.random_seed)?;
    let reports = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            let model = fit_rows(spec, dataset, &train)?;
            let mut held_out = dataset.subset(test);
            held_out.impute_influence(model.imputed_influence);
            let predictions = model.predict_batch(&held_out.features)?;
            let y_pred: Vec<usize> = predictions.iter().map(|p| p.label).collect();
            let scores: Vec<Vec<f64>> = predictions.into_iter().map(|p| p.confidences).collect();
            metrics(&held_out.labels, &y_pred, &scores, &dataset.classes)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(average_reports(&reports))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub name: String,
    pub macro_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// Single features, best first.
    pub features: Vec<ImportanceEntry>,
    /// Feature families in canonical order.
    pub families: Vec<ImportanceEntry>,
    pub all_features: f64,
}

/// Binary linear-SVM cross-validation on each feature alone, on each
/// feature family, and on the full vector.
pub fn single_feature_importance(
    dataset: &LabeledDataset,
    k: usize,
    seed: u64,
) -> Result<ImportanceReport, EvalError> {
    let binary = dataset.to_binary();
    let spec = ModelSpec::new(ModelKind::LinearSvm, binary.mode, seed);
    let run = |columns: Vec<usize>| -> Result<f64, EvalError> {
        Ok(cross_validate(&spec, &binary.select_columns(&columns), k)?.macro_f1)
    };
    let width = binary.features.cols();
    let mut features = (0..width)
        .into_par_iter()
        .map(|j| {
            Ok(ImportanceEntry {
                name: binary.feature_names[j].clone(),
                macro_f1: run(vec![j])?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    features.sort_by(|a, b| b.macro_f1.total_cmp(&a.macro_f1));
    let families = if width == FEATURE_COUNT {
        Family::ALL
            .iter()
            .map(|f| {
                Ok(ImportanceEntry {
                    name: f.prefix().to_string(),
                    macro_f1: run(f.range().collect())?,
                })
            })
            .collect::<Result<Vec<_>, EvalError>>()?
    } else {
        Vec::new()
    };
    let all_features = run((0..width).collect())?;
    Ok(ImportanceReport {
        features,
        families,
        all_features,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::Length(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::TooShort(x.len()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let mx = mean(&rx);
    let my = mean(&ry);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
