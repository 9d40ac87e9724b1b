//! Retweeter scoring with confidence-gated human feedback.
//!
//! A [`ScoringService`] labels the retweeters of a tweet with the active
//! model. Users may flag a label as wrong; a flag is ignored when the active
//! model gives the flagged label more than `confidence_threshold`
//! probability, and queued otherwise. Once `retrain_trigger` flags are
//! queued the model is retrained on the base labels overridden by the
//! feedback (latest flag per user wins) and swapped in atomically.
//!
//! With a state directory the service persists:
//!
//! - `active.json`: the active model with its version and training time;
//! - `buffer.jsonl`: accepted feedback not yet used for training;
//! - `events.jsonl`: every feedback event with its outcome;
//! - `audit.jsonl`: one record per retrain.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::RetweetThread;
use crate::corpus::{ClassMode, Corpus, CorpusError, LabelMap, UserRecord};
use crate::dataset::{self, LabeledDataset};
use crate::features::{extract_all, feature_names, ExtractionConfig, FeatureError, INFLUENCE_FALLBACK, INFLUENCE_INDEX};
use crate::models::{Matrix, ModelError, ModelSpec, TrainedModel};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no active model")]
    NoActiveModel,
    #[error("label {0:?} is not in the model's label space")]
    UnknownLabel(String),
    #[error("four-class feedback must name the corrected class")]
    MissingCorrection,
    #[error("tweet {0:?} could not be resolved")]
    TweetNotFound(String),
    #[error("the active model cannot produce {0:?} labels")]
    ModeUnavailable(ClassMode),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("state persistence failed")]
    Persist(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackPolicy {
    pub confidence_threshold: f64,
    pub retrain_trigger: usize,
}

impl Default for FeedbackPolicy {
    fn default() -> Self {
        FeedbackPolicy {
            confidence_threshold: 0.75,
            retrain_trigger: 25,
        }
    }
}

impl FeedbackPolicy {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold <= 1.0) {
            return Err(ServiceError::Policy(format!(
                "confidence_threshold {} outside (0, 1]",
                self.confidence_threshold
            )));
        }
        if self.retrain_trigger == 0 {
            return Err(ServiceError::Policy("retrain_trigger must be positive".into()));
        }
        Ok(())
    }

    /// Whether a flag against a prediction held with `confidence` is ignored.
    pub fn ignores(&self, confidence: f64) -> bool {
        confidence > self.confidence_threshold
    }
}

/// A human's thumbs-down on a predicted label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub user_id: String,
    pub predicted_label: String,
    /// Required for four-class models; binary flags flip the label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_label: Option<String>,
    #[serde(default = "default_flagged")]
    pub flagged: bool,
    #[serde(default = "Utc::now")]
    pub submitted_at: DateTime<Utc>,
    #[serde(default)]
    pub client_id: String,
}

fn default_flagged() -> bool {
    true
}

impl FeedbackEvent {
    pub fn flag(user_id: impl Into<String>, predicted_label: impl Into<String>) -> Self {
        FeedbackEvent {
            user_id: user_id.into(),
            predicted_label: predicted_label.into(),
            corrected_label: None,
            flagged: true,
            submitted_at: Utc::now(),
            client_id: String::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackOutcome {
    Accepted,
    IgnoredHighConfidence,
    RejectedUnknownUser,
}

/// Queued feedback: the user and the class index to train on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedFeedback {
    pub user_id: String,
    pub label: usize,
    pub submitted_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub event: FeedbackEvent,
    pub outcome: FeedbackOutcome,
    /// Model probability of the flagged label, when the user was known.
    pub confidence: Option<f64>,
    pub model_version: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveModel {
    pub version: u64,
    pub trained_at: DateTime<Utc>,
    pub model: TrainedModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrainRecord {
    pub version: u64,
    pub trained_at: DateTime<Utc>,
    pub feedback_consumed: usize,
    pub training_rows: usize,
}

/// Who to score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retweeters {
    TweetRef(String),
    RetweeterIds(Vec<String>),
    InlineRecords(Vec<UserRecord>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub user_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScoreEntry {
    fn failed(user_id: &str, error: impl Into<String>) -> Self {
        ScoreEntry {
            user_id: user_id.to_string(),
            label: None,
            confidence: None,
            error: Some(error.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub model_version: u64,
    pub mode: ClassMode,
    pub results: Vec<ScoreEntry>,
}

/// Resolves a tweet reference to its retweeter ids.
pub trait TweetFetcher: Send + Sync {
    fn retweeters(&self, tweet_ref: &str) -> Result<Vec<String>, ServiceError>;
}

/// Offline fetcher over captured retweet threads. Accepts a bare tweet id
/// or a URL whose last path segment is the id.
#[derive(Clone, Debug, Default)]
pub struct ThreadIndex {
    threads: HashMap<String, Vec<String>>,
}

impl ThreadIndex {
    pub fn new(threads: &[RetweetThread]) -> Self {
        ThreadIndex {
            threads: threads
                .iter()
                .map(|t| (t.tweet_id.clone(), t.events.iter().map(|e| e.user_id.clone()).collect()))
                .collect(),
        }
    }
}

impl TweetFetcher for ThreadIndex {
    fn retweeters(&self, tweet_ref: &str) -> Result<Vec<String>, ServiceError> {
        let key = tweet_ref
            .trim_end_matches('/')
            .rsplit('/')
            .next()
            .unwrap_or(tweet_ref)
            .split('?')
            .next()
            .unwrap_or_default();
        self.threads
            .get(key)
            .or_else(|| self.threads.get(tweet_ref))
            .cloned()
            .ok_or_else(|| ServiceError::TweetNotFound(tweet_ref.to_string()))
    }
}

/// Cached features of a store user, influence column not yet imputed.
#[derive(Clone, Debug)]
struct CachedFeatures {
    values: Vec<f64>,
    influence: Option<f64>,
}

impl CachedFeatures {
    fn row_for(&self, model: &TrainedModel) -> Vec<f64> {
        let mut row = self.values.clone();
        row[INFLUENCE_INDEX] = self.influence.unwrap_or(model.imputed_influence);
        row
    }
}

#[derive(Debug, Default)]
struct FeedbackState {
    buffer: Vec<AcceptedFeedback>,
}

struct StateDir {
    root: PathBuf,
}

impl StateDir {
    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn append<T: Serialize>(&self, name: &str, item: &T) -> io::Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.path(name))?;
        let mut line = serde_json::to_vec(item).map_err(io::Error::other)?;
        line.push(b'\n');
        f.write_all(&line)?;
        f.sync_data()
    }

    fn read_lines<T: serde::de::DeserializeOwned>(&self, name: &str) -> io::Result<Vec<T>> {
        let path = self.path(name);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(io::Error::other)?);
        }
        Ok(out)
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> io::Result<()> {
        let tmp = self.path(&format!("{name}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(tmp, self.path(name))
    }

    fn save_active(&self, active: &ActiveModel) -> io::Result<()> {
        let bytes = serde_json::to_vec(active).map_err(io::Error::other)?;
        self.write_atomic("active.json", &bytes)
    }

    fn load_active(&self) -> io::Result<Option<ActiveModel>> {
        let path = self.path("active.json");
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map(Some).map_err(io::Error::other)
    }

    fn rewrite_buffer(&self, buffer: &[AcceptedFeedback]) -> io::Result<()> {
        let mut bytes = Vec::new();
        for item in buffer {
            serde_json::to_writer(&mut bytes, item).map_err(io::Error::other)?;
            bytes.push(b'\n');
        }
        self.write_atomic("buffer.jsonl", &bytes)
    }
}

/// Scoring service state shared between request handlers.
pub struct ScoringService {
    store: Corpus,
    base_labels: LabelMap,
    spec: ModelSpec,
    policy: FeedbackPolicy,
    extraction: ExtractionConfig,
    cache: HashMap<String, CachedFeatures>,
    active: RwLock<Option<Arc<ActiveModel>>>,
    feedback: Mutex<FeedbackState>,
    retrain_lock: Mutex<()>,
    state: Option<StateDir>,
    fetcher: Box<dyn TweetFetcher>,
}

impl ScoringService {
    /// Builds the service over `store`. `base_labels` is the training set
    /// feedback is merged into. When `state_dir` holds a persisted model and
    /// buffer they take precedence over `initial`.
    pub fn new(
        store: Corpus,
        base_labels: LabelMap,
        spec: ModelSpec,
        initial: Option<TrainedModel>,
        policy: FeedbackPolicy,
        state_dir: Option<PathBuf>,
    ) -> Result<Self, ServiceError> {
        policy.validate()?;
        for (id, _) in base_labels.iter() {
            if !store.contains(id) {
                return Err(CorpusError::UnknownId(id.to_string()).into());
            }
        }
        let extraction = ExtractionConfig::new(store.snapshot_time());
        let cache = store
            .records()
            .par_iter()
            .map(|r| {
                extract_all(r, &extraction, INFLUENCE_FALLBACK).map(|v| {
                    (
                        r.user_id().to_string(),
                        CachedFeatures {
                            values: v.values().to_vec(),
                            influence: r.influence_score,
                        },
                    )
                })
            })
            .collect::<Result<HashMap<_, _>, _>>()?;
        let state = match state_dir {
            Some(root) => {
                fs::create_dir_all(&root)?;
                Some(StateDir { root })
            }
            None => None,
        };
        let mut active = initial.map(|model| ActiveModel {
            version: 1,
            trained_at: Utc::now(),
            model,
        });
        let mut buffer = Vec::new();
        if let Some(dir) = &state {
            if let Some(saved) = dir.load_active()? {
                log::info!("restored model version {} from {}", saved.version, dir.root.display());
                active = Some(saved);
            } else if let Some(a) = &active {
                dir.save_active(a)?;
            }
            buffer = dir.read_lines("buffer.jsonl")?;
        }
        Ok(ScoringService {
            store,
            base_labels,
            spec,
            policy,
            extraction,
            cache,
            active: RwLock::new(active.map(Arc::new)),
            feedback: Mutex::new(FeedbackState { buffer }),
            retrain_lock: Mutex::new(()),
            state,
            fetcher: Box::new(ThreadIndex::default()),
        })
    }

    pub fn with_fetcher(mut self, fetcher: impl TweetFetcher + 'static) -> Self {
        self.fetcher = Box::new(fetcher);
        self
    }

    pub fn policy(&self) -> FeedbackPolicy {
        self.policy
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn store(&self) -> &Corpus {
        &self.store
    }

    /// Snapshot of the active model; holders keep that version even if a
    /// retrain swaps in a new one.
    pub fn active(&self) -> Option<Arc<ActiveModel>> {
        self.active.read().expect("model lock poisoned").clone()
    }

    pub fn buffer_len(&self) -> usize {
        self.feedback.lock().expect("feedback lock poisoned").buffer.len()
    }

    pub fn buffered(&self) -> Vec<AcceptedFeedback> {
        self.feedback.lock().expect("feedback lock poisoned").buffer.clone()
    }

    /// Events persisted in the state directory, oldest first.
    pub fn event_log(&self) -> Result<Vec<LoggedEvent>, ServiceError> {
        match &self.state {
            Some(dir) => Ok(dir.read_lines("events.jsonl")?),
            None => Ok(Vec::new()),
        }
    }

    fn row_for_record(&self, record: &UserRecord, model: &TrainedModel) -> Result<Vec<f64>, ServiceError> {
        if let Some(cached) = self.cache.get(record.user_id()) {
            if self.store.get(record.user_id()) == Some(record) {
                return Ok(cached.row_for(model));
            }
        }
        let snapshot = record
            .last_activity()
            .map_or(self.extraction.snapshot_time, |t| t.max(self.extraction.snapshot_time));
        let cfg = ExtractionConfig {
            snapshot_time: snapshot.max(record.profile.created_at),
            ..self.extraction.clone()
        };
        Ok(extract_all(record, &cfg, model.imputed_influence)?.values().to_vec())
    }

    fn label_and_confidence(
        model: &TrainedModel,
        row: &[f64],
        mode: ClassMode,
    ) -> Result<(String, f64), ServiceError> {
        let probs = model.predict_proba(row)?;
        let (names, probs) = match (model.spec.class_mode, mode) {
            (a, b) if a == b => (model.classes.clone(), probs),
            (ClassMode::FourClass, ClassMode::Binary) => {
                let customer: f64 = probs[1..].iter().sum();
                (ClassMode::Binary.class_names(), vec![probs[0], customer])
            }
            _ => return Err(ServiceError::ModeUnavailable(mode)),
        };
        let best = crate::models::argmax(&probs);
        Ok((names[best].clone(), probs[best]))
    }

    /// Labels every retweeter. Unknown users and per-user failures become
    /// error entries; the rest are still scored.
    pub fn score_retweeters(&self, request: &Retweeters, mode: Option<ClassMode>) -> Result<ScoreResponse, ServiceError> {
        let active = self.active().ok_or(ServiceError::NoActiveModel)?;
        let model = &active.model;
        let mode = mode.unwrap_or(ClassMode::Binary);
        if model.spec.class_mode == ClassMode::Binary && mode == ClassMode::FourClass {
            return Err(ServiceError::ModeUnavailable(mode));
        }
        let score_record = |record: &UserRecord| -> ScoreEntry {
            match self
                .row_for_record(record, model)
                .and_then(|row| Self::label_and_confidence(model, &row, mode))
            {
                Ok((label, confidence)) => ScoreEntry {
                    user_id: record.user_id().to_string(),
                    label: Some(label),
                    confidence: Some(confidence),
                    error: None,
                },
                Err(e) => ScoreEntry::failed(record.user_id(), e.to_string()),
            }
        };
        let score_id = |id: &String| -> ScoreEntry {
            match self.store.get(id) {
                Some(record) => score_record(record),
                None => ScoreEntry::failed(id, "user not found"),
            }
        };
        let results = match request {
            Retweeters::TweetRef(r) => self.fetcher.retweeters(r)?.iter().map(score_id).collect(),
            Retweeters::RetweeterIds(ids) => ids.iter().map(score_id).collect(),
            Retweeters::InlineRecords(records) => records
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.sort_timeline();
                    score_record(&r)
                })
                .collect(),
        };
        Ok(ScoreResponse {
            model_version: active.version,
            mode,
            results,
        })
    }

    fn class_index(model: &TrainedModel, label: &str) -> Result<usize, ServiceError> {
        model
            .classes
            .iter()
            .position(|c| c.eq_ignore_ascii_case(label))
            .ok_or_else(|| ServiceError::UnknownLabel(label.to_string()))
    }

    /// Probability the model gave the flagged label. A four-class model also
    /// accepts the binary customer label, scored as the customer-class mass.
    fn flagged_confidence(model: &TrainedModel, label: &str, probs: &[f64]) -> Result<(Option<usize>, f64), ServiceError> {
        match Self::class_index(model, label) {
            Ok(i) => Ok((Some(i), probs[i])),
            Err(e) => {
                let customer = &ClassMode::Binary.class_names()[1];
                if model.n_classes() > 2 && label.eq_ignore_ascii_case(customer) {
                    Ok((None, probs[1..].iter().sum()))
                } else {
                    Err(e)
                }
            }
        }
    }

    /// Applies the confidence gate and queues accepted feedback.
    pub fn submit_feedback(&self, event: FeedbackEvent) -> Result<FeedbackOutcome, ServiceError> {
        let active = self.active().ok_or(ServiceError::NoActiveModel)?;
        let model = &active.model;
        let (outcome, confidence) = match self.cache.get(&event.user_id) {
            None => (FeedbackOutcome::RejectedUnknownUser, None),
            Some(cached) => {
                let probs = model.predict_proba(&cached.row_for(model))?;
                let (flagged, confidence) = Self::flagged_confidence(model, &event.predicted_label, &probs)?;
                let corrected = match (&event.corrected_label, flagged) {
                    (Some(label), _) => Self::class_index(model, label)?,
                    (None, Some(f)) if model.n_classes() == 2 => 1 - f,
                    (None, _) => return Err(ServiceError::MissingCorrection),
                };
                if !event.flagged {
                    (FeedbackOutcome::IgnoredHighConfidence, Some(confidence))
                } else if self.policy.ignores(confidence) {
                    log::info!(
                        "ignoring flag on {} ({}): model confidence {confidence:.3}",
                        event.user_id,
                        event.predicted_label
                    );
                    (FeedbackOutcome::IgnoredHighConfidence, Some(confidence))
                } else {
                    let accepted = AcceptedFeedback {
                        user_id: event.user_id.clone(),
                        label: corrected,
                        submitted_at: event.submitted_at,
                    };
                    let mut state = self.feedback.lock().expect("feedback lock poisoned");
                    if let Some(dir) = &self.state {
                        dir.append("buffer.jsonl", &accepted)?;
                    }
                    state.buffer.push(accepted);
                    (FeedbackOutcome::Accepted, Some(confidence))
                }
            }
        };
        if let Some(dir) = &self.state {
            dir.append(
                "events.jsonl",
                &LoggedEvent {
                    event,
                    outcome,
                    confidence,
                    model_version: Some(active.version),
                },
            )?;
        }
        Ok(outcome)
    }

    /// Training set: base labels overridden by `feedback`, later entries
    /// winning, plus feedback users outside the base set.
    pub fn training_set(&self, feedback: &[AcceptedFeedback], mode: ClassMode) -> LabeledDataset {
        let mut labels: Vec<(String, usize)> = Vec::new();
        let mut position: HashMap<String, usize> = HashMap::new();
        for (id, class) in self.base_labels.iter() {
            position.insert(id.to_string(), labels.len());
            labels.push((id.to_string(), class.index(mode)));
        }
        for fb in feedback {
            match position.get(&fb.user_id) {
                Some(&i) => labels[i].1 = fb.label,
                None => {
                    position.insert(fb.user_id.clone(), labels.len());
                    labels.push((fb.user_id.clone(), fb.label));
                }
            }
        }
        let rows: Vec<&[f64]> = labels.iter().map(|(id, _)| self.cache[id].values.as_slice()).collect();
        LabeledDataset {
            user_ids: labels.iter().map(|(id, _)| id.clone()).collect(),
            features: Matrix::from_rows(&rows).expect("cached rows share one width"),
            feature_names: feature_names(),
            influence: labels.iter().map(|(id, _)| self.cache[id].influence).collect(),
            influence_column: Some(INFLUENCE_INDEX),
            labels: labels.iter().map(|(_, l)| *l).collect(),
            classes: mode.class_names(),
            mode,
        }
    }

    /// Retrains once the buffer reaches the trigger. On failure the previous
    /// model and the buffer are kept.
    pub fn retrain_if_due(&self) -> Result<Option<Arc<ActiveModel>>, ServiceError> {
        let _writer = self.retrain_lock.lock().expect("retrain lock poisoned");
        let pending = {
            let state = self.feedback.lock().expect("feedback lock poisoned");
            if state.buffer.len() < self.policy.retrain_trigger {
                return Ok(None);
            }
            state.buffer.clone()
        };
        let previous_version = self.active().map_or(0, |a| a.version);
        let dataset = self.training_set(&pending, self.spec.class_mode);
        let model = match dataset::fit(&self.spec, &dataset) {
            Ok(m) => m,
            Err(e) => {
                log::error!("retrain failed, keeping model version {previous_version}: {e}");
                return Err(e.into());
            }
        };
        let next = Arc::new(ActiveModel {
            version: previous_version + 1,
            trained_at: Utc::now(),
            model,
        });
        {
            let mut state = self.feedback.lock().expect("feedback lock poisoned");
            // feedback that arrived while training stays queued
            state.buffer.drain(..pending.len());
            if let Some(dir) = &self.state {
                dir.save_active(&next)?;
                dir.rewrite_buffer(&state.buffer)?;
                dir.append(
                    "audit.jsonl",
                    &RetrainRecord {
                        version: next.version,
                        trained_at: next.trained_at,
                        feedback_consumed: pending.len(),
                        training_rows: dataset.len(),
                    },
                )?;
            }
            *self.active.write().expect("model lock poisoned") = Some(Arc::clone(&next));
        }
        log::info!("model version {} trained on {} rows", next.version, dataset.len());
        Ok(Some(next))
    }

    /// Replaces the active model, e.g. after an external training run.
    pub fn install(&self, model: TrainedModel) -> Result<Arc<ActiveModel>, ServiceError> {
        let _writer = self.retrain_lock.lock().expect("retrain lock poisoned");
        let next = Arc::new(ActiveModel {
            version: self.active().map_or(0, |a| a.version) + 1,
            trained_at: Utc::now(),
            model,
        });
        if let Some(dir) = &self.state {
            dir.save_active(&next)?;
        }
        *self.active.write().expect("model lock poisoned") = Some(Arc::clone(&next));
        Ok(next)
    }
}

/// Service configuration, read from TOML and overridable from the
/// environment (`RETWEET_GUARD_LISTEN`, `_MODEL`, `_CORPUS`, `_LABELS`,
/// `_THREADS`, `_STATE_DIR`, `_THRESHOLD`, `_RETRAIN_TRIGGER`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub listen: String,
    pub model_path: Option<PathBuf>,
    pub corpus_path: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
    pub scores_path: Option<PathBuf>,
    pub threads_path: Option<PathBuf>,
    pub state_dir: Option<PathBuf>,
    pub confidence_threshold: f64,
    pub retrain_trigger: usize,
    pub model: Option<String>,
    pub four_class: bool,
    pub seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let policy = FeedbackPolicy::default();
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            model_path: None,
            corpus_path: None,
            labels_path: None,
            scores_path: None,
            threads_path: None,
            state_dir: None,
            confidence_threshold: policy.confidence_threshold,
            retrain_trigger: policy.retrain_trigger,
            model: None,
            four_class: false,
            seed: 0,
        }
    }
}

pub const ENV_PREFIX: &str = "RETWEET_GUARD_";

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| format!("{}: {e}", path.as_ref().display()))?;
        Self::from_toml(&text)
    }

    /// Applies overrides from `vars` (normally `std::env::vars()`).
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<(), String> {
        for (key, value) in vars {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let parse_err = |e: &dyn std::fmt::Display| format!("{key}={value:?}: {e}");
            match name {
                "LISTEN" => self.listen = value,
                "MODEL" => self.model_path = Some(value.into()),
                "CORPUS" => self.corpus_path = Some(value.into()),
                "LABELS" => self.labels_path = Some(value.into()),
                "SCORES" => self.scores_path = Some(value.into()),
                "THREADS" => self.threads_path = Some(value.into()),
                "STATE_DIR" => self.state_dir = Some(value.into()),
                "THRESHOLD" => self.confidence_threshold = value.parse().map_err(|e| parse_err(&e))?,
                "RETRAIN_TRIGGER" => self.retrain_trigger = value.parse().map_err(|e| parse_err(&e))?,
                _ => log::warn!("ignoring unknown setting {key}"),
            }
        }
        Ok(())
    }

    pub fn policy(&self) -> FeedbackPolicy {
        FeedbackPolicy {
            confidence_threshold: self.confidence_threshold,
            retrain_trigger: self.retrain_trigger,
        }
    }
}
