//! User records, labels and enrichment scores, plus their file formats.
//!
//! Three files feed the pipeline:
//!
//! - the corpus file, one JSON user object per line (profile fields, the
//!   optional `bot_score` / `influence_score`, and a `posts` array);
//! - the label file, `user_id<TAB>class`;
//! - the score-provider file, `user_id<TAB>bot_score<TAB>influence_score`
//!   with `-` marking a missing value.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on the number of posts kept per user.
pub const MAX_TIMELINE: usize = 3200;

pub const BOT_SCORE_RANGE: (f64, f64) = (0.0, 1.0);
pub const INFLUENCE_RANGE: (f64, f64) = (1.0, 100.0);

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate user_id {0:?}")]
    DuplicateId(String),
    #[error("unknown user_id {0:?}")]
    UnknownId(String),
    #[error("line {line}: unknown class {token:?}")]
    UnknownClass { line: usize, token: String },
    #[error("user {user_id:?}: {field} {value} outside [{min}, {max}]")]
    ScoreRange {
        user_id: String,
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("user {user_id:?}: {message}")]
    Invalid { user_id: String, message: String },
    #[error("score provider unavailable: {0}")]
    ProviderUnavailable(String),
}

impl CorpusError {
    fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub user_id: String,
    pub screen_name: String,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub has_url: bool,
    pub followee_count: u64,
    pub follower_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_status_count: Option<u64>,
    #[serde(default)]
    pub verified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostKind {
    OriginalTweet,
    RetweetAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub timestamp: DateTime<Utc>,
    pub kind: PostKind,
    #[serde(default)]
    pub mention_count: u64,
    #[serde(default)]
    pub url_count: u64,
    #[serde(default)]
    pub hashtag_count: u64,
    /// Only meaningful for original tweets.
    #[serde(default)]
    pub received_retweet_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    #[serde(flatten)]
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bot_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influence_score: Option<f64>,
    #[serde(default, rename = "posts")]
    pub timeline: Vec<Post>,
}

impl UserRecord {
    pub fn user_id(&self) -> &str {
        &self.profile.user_id
    }

    /// Sorts the timeline ascending by timestamp. The sort is stable, so
    /// posts sharing a timestamp keep their file order.
    pub fn sort_timeline(&mut self) {
        self.timeline.sort_by_key(|p| p.timestamp);
    }

    pub fn last_activity(&self) -> Option<DateTime<Utc>> {
        self.timeline.iter().map(|p| p.timestamp).max()
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |message: String| CorpusError::Invalid {
            user_id: self.profile.user_id.clone(),
            message,
        };
        if self.profile.user_id.is_empty() {
            return Err(invalid("empty user_id".into()));
        }
        if self.timeline.len() > MAX_TIMELINE {
            return Err(invalid(format!(
                "timeline has {} posts, limit is {MAX_TIMELINE}",
                self.timeline.len()
            )));
        }
        if let Some(p) = self
            .timeline
            .iter()
            .find(|p| p.timestamp < self.profile.created_at)
        {
            return Err(invalid(format!(
                "post {} at {} precedes account creation {}",
                p.post_id, p.timestamp, self.profile.created_at
            )));
        }
        check_scores(self.user_id(), self.bot_score, self.influence_score)
    }
}

fn check_range(
    user_id: &str,
    field: &'static str,
    value: Option<f64>,
    (min, max): (f64, f64),
) -> Result<(), CorpusError> {
    match value {
        Some(v) if !(v >= min && v <= max) => Err(CorpusError::ScoreRange {
            user_id: user_id.to_string(),
            field,
            value: v,
            min,
            max,
        }),
        _ => Ok(()),
    }
}

fn check_scores(user_id: &str, bot: Option<f64>, influence: Option<f64>) -> Result<(), CorpusError> {
    check_range(user_id, "bot_score", bot, BOT_SCORE_RANGE)?;
    check_range(user_id, "influence_score", influence, INFLUENCE_RANGE)
}

/// Immutable collection of user records with a reference "now".
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    records: Vec<UserRecord>,
    snapshot_time: DateTime<Utc>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, sorting every timeline and validating invariants.
    /// Without an explicit snapshot the latest post timestamp is used (or the
    /// latest account creation when no posts exist).
    pub fn new(
        mut records: Vec<UserRecord>,
        snapshot_time: Option<DateTime<Utc>>,
    ) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, record) in records.iter_mut().enumerate() {
            record.sort_timeline();
            record.validate()?;
            if index.insert(record.profile.user_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(record.profile.user_id.clone()));
            }
        }
        let latest = records
            .iter()
            .filter_map(UserRecord::last_activity)
            .max()
            .or_else(|| records.iter().map(|r| r.profile.created_at).max())
            .unwrap_or(DateTime::<Utc>::UNIX_EPOCH);
        let snapshot_time = snapshot_time.unwrap_or(latest);
        for record in &records {
            let newest = record.last_activity().unwrap_or(record.profile.created_at);
            if newest.max(record.profile.created_at) > snapshot_time {
                return Err(CorpusError::Invalid {
                    user_id: record.profile.user_id.clone(),
                    message: format!("activity after snapshot time {snapshot_time}"),
                });
            }
        }
        Ok(Corpus {
            records,
            snapshot_time,
            index,
        })
    }

    pub fn records(&self) -> &[UserRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<UserRecord> {
        self.records
    }

    pub fn snapshot_time(&self) -> DateTime<Utc> {
        self.snapshot_time
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, user_id: &str) -> Option<&UserRecord> {
        self.index.get(user_id).map(|&i| &self.records[i])
    }

    pub fn contains(&self, user_id: &str) -> bool {
        self.index.contains_key(user_id)
    }
}

/// Reads a corpus file. `snapshot_time` overrides the default reference time.
pub fn load_corpus(
    path: impl AsRef<Path>,
    snapshot_time: Option<DateTime<Utc>>,
) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_corpus(BufReader::new(file), snapshot_time).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::io(path, source),
        other => other,
    })
}

pub fn read_corpus(
    reader: impl BufRead,
    snapshot_time: Option<DateTime<Utc>>,
) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(Path::new("<corpus>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: UserRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(record.profile.user_id.clone()) {
            return Err(CorpusError::DuplicateId(record.profile.user_id));
        }
        records.push(record);
    }
    Corpus::new(records, snapshot_time)
}

pub fn write_corpus(corpus: &Corpus, mut writer: impl Write) -> io::Result<()> {
    for record in corpus.records() {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    write_corpus(corpus, BufWriter::new(file)).map_err(|e| CorpusError::io(path, e))
}

/// Annotated account category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Genuine,
    Bot,
    Promotional,
    Normal,
}

impl Class {
    pub const ALL: [Class; 4] = [Class::Genuine, Class::Bot, Class::Promotional, Class::Normal];

    pub fn is_customer(self) -> bool {
        self != Class::Genuine
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Genuine => "genuine",
            Class::Bot => "bot",
            Class::Promotional => "promotional",
            Class::Normal => "normal",
        }
    }

    /// Index of this class in the label space of `mode`.
    pub fn index(self, mode: ClassMode) -> usize {
        match mode {
            ClassMode::FourClass => self as usize,
            ClassMode::Binary => usize::from(self.is_customer()),
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "genuine" => Ok(Class::Genuine),
            "bot" | "bots" => Ok(Class::Bot),
            "promotional" => Ok(Class::Promotional),
            "normal" => Ok(Class::Normal),
            _ => Err(s.to_string()),
        }
    }
}

/// Which label space a model is trained on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMode {
    FourClass,
    #[default]
    Binary,
}

impl ClassMode {
    pub fn class_names(self) -> Vec<String> {
        match self {
            ClassMode::FourClass => Class::ALL.iter().map(|c| c.as_str().to_string()).collect(),
            ClassMode::Binary => vec!["genuine".to_string(), "customer".to_string()],
        }
    }

    pub fn n_classes(self) -> usize {
        match self {
            ClassMode::FourClass => 4,
            ClassMode::Binary => 2,
        }
    }
}

/// Ground-truth labels keyed by user id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelMap {
    labels: BTreeMap<String, Class>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a label; the corpus check happens at load time.
    pub fn insert(&mut self, user_id: impl Into<String>, class: Class) -> Option<Class> {
        self.labels.insert(user_id.into(), class)
    }

    pub fn get(&self, user_id: &str) -> Option<Class> {
        self.labels.get(user_id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Class)> {
        self.labels.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn counts(&self) -> BTreeMap<Class, usize> {
        let mut counts = BTreeMap::new();
        for &class in self.labels.values() {
            *counts.entry(class).or_insert(0) += 1;
        }
        counts
    }

    /// `(genuine, customer)` counts of the binary view.
    pub fn binary_counts(&self) -> (usize, usize) {
        let customers = self.labels.values().filter(|c| c.is_customer()).count();
        (self.labels.len() - customers, customers)
    }

    pub fn customers(&self) -> HashSet<String> {
        self.iter()
            .filter(|(_, c)| c.is_customer())
            .map(|(id, _)| id.to_string())
            .collect()
    }
}

pub fn load_labels(path: impl AsRef<Path>, corpus: &Corpus) -> Result<LabelMap, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_labels(BufReader::new(file), corpus)
}

pub fn read_labels(reader: impl BufRead, corpus: &Corpus) -> Result<LabelMap, CorpusError> {
    let mut labels = LabelMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(Path::new("<labels>"), e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, token) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
            line: i + 1,
            message: "expected user_id<TAB>class".into(),
        })?;
        if i == 0 && id == "user_id" {
            continue;
        }
        let class = token.parse::<Class>().map_err(|token| CorpusError::UnknownClass {
            line: i + 1,
            token,
        })?;
        if !corpus.contains(id) {
            return Err(CorpusError::UnknownId(id.to_string()));
        }
        if labels.insert(id, class).is_some() {
            return Err(CorpusError::Parse {
                line: i + 1,
                message: format!("second label for {id:?}"),
            });
        }
    }
    log::info!("loaded {} labels: {:?}", labels.len(), labels.counts());
    Ok(labels)
}

pub fn save_labels(labels: &LabelMap, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let write = || -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for (id, class) in labels.iter() {
            writeln!(out, "{id}\t{class}")?;
        }
        out.flush()
    };
    write().map_err(|e| CorpusError::io(path, e))
}

/// Enrichment scores for one user. Either may be missing.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Scores {
    pub bot_score: Option<f64>,
    pub influence_score: Option<f64>,
}

/// Resolves a user id to its enrichment scores.
pub trait ScoreProvider {
    fn lookup(&self, user_id: &str) -> Result<Option<Scores>, CorpusError>;
}

/// Score provider backed by a tab-separated file.
#[derive(Clone, Debug, Default)]
pub struct FileScoreProvider {
    entries: HashMap<String, Scores>,
}

impl FileScoreProvider {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    pub fn read(reader: impl BufRead) -> Result<Self, CorpusError> {
        let mut entries = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| CorpusError::io(Path::new("<scores>"), e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(CorpusError::Parse {
                    line: i + 1,
                    message: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            if i == 0 && cols[0] == "user_id" {
                continue;
            }
            let parse = |s: &str| -> Result<Option<f64>, CorpusError> {
                match s.trim() {
                    "-" | "" => Ok(None),
                    v => v.parse::<f64>().map(Some).map_err(|e| CorpusError::Parse {
                        line: i + 1,
                        message: format!("{v:?}: {e}"),
                    }),
                }
            };
            let scores = Scores {
                bot_score: parse(cols[1])?,
                influence_score: parse(cols[2])?,
            };
            check_scores(cols[0], scores.bot_score, scores.influence_score)?;
            entries.insert(cols[0].to_string(), scores);
        }
        Ok(FileScoreProvider { entries })
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, Scores)>) -> Self {
        FileScoreProvider {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ScoreProvider for FileScoreProvider {
    fn lookup(&self, user_id: &str) -> Result<Option<Scores>, CorpusError> {
        Ok(self.entries.get(user_id).copied())
    }
}

/// Placeholder for a networked score service. No client ships with the
/// crate; every lookup fails.
#[derive(Clone, Debug)]
pub struct RemoteScoreProvider {
    pub endpoint: String,
}

impl ScoreProvider for RemoteScoreProvider {
    fn lookup(&self, _user_id: &str) -> Result<Option<Scores>, CorpusError> {
        Err(CorpusError::ProviderUnavailable(format!(
            "no remote client configured for {}",
            self.endpoint
        )))
    }
}

/// Copies available scores from `provider` onto the records. Scores the
/// provider does not know are left as they were.
pub fn attach_scores(corpus: Corpus, provider: &dyn ScoreProvider) -> Result<Corpus, CorpusError> {
    let snapshot = corpus.snapshot_time;
    let mut records = corpus.into_records();
    for record in &mut records {
        if let Some(scores) = provider.lookup(record.user_id())? {
            check_scores(record.user_id(), scores.bot_score, scores.influence_score)?;
            if scores.bot_score.is_some() {
                record.bot_score = scores.bot_score;
            }
            if scores.influence_score.is_some() {
                record.influence_score = scores.influence_score;
            }
        }
    }
    Corpus::new(records, Some(snapshot))
}

pub fn save_scores(records: &[UserRecord], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
    let write = || -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for r in records {
            writeln!(
                out,
                "{}\t{}\t{}",
                r.user_id(),
                fmt_opt(r.bot_score),
                fmt_opt(r.influence_score)
            )?;
        }
        out.flush()
    };
    write().map_err(|e| CorpusError::io(path, e))
}
