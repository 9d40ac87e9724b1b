//! The 64 behavioural features computed per user.
//!
//! Order is fixed: five profile features (PF1..PF5), four social-network
//! features (SNF1..SNF4), eight activity features (UAF1..UAF8), 44
//! likelihood features (LF1..LF44) and three fluctuation features
//! (FF1..FF3). Weekdays and hours are taken in UTC.

use std::fmt;
use std::ops::Range;

use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PostKind, Profile, UserRecord};
use crate::stats::{median, Moments};

pub const FEATURE_COUNT: usize = 64;

/// Index of SNF4 (influence score) in the feature vector.
pub const INFLUENCE_INDEX: usize = 8;
/// Index of UAF8 (bot score) in the feature vector.
pub const BOT_SCORE_INDEX: usize = 16;

/// Used when no training record carries an influence score.
pub const INFLUENCE_FALLBACK: f64 = 50.5;

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("user {user_id:?}: account created at {created_at}, after snapshot {snapshot}")]
    CreatedAfterSnapshot {
        user_id: String,
        created_at: DateTime<Utc>,
        snapshot: DateTime<Utc>,
    },
    #[error("user {user_id:?}: feature {feature} is not finite")]
    NonFinite { user_id: String, feature: String },
    #[error("expected {FEATURE_COUNT} values, got {0}")]
    Length(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Profile,
    SocialNetwork,
    UserActivity,
    Likelihood,
    Fluctuation,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Profile,
        Family::SocialNetwork,
        Family::UserActivity,
        Family::Likelihood,
        Family::Fluctuation,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            Family::Profile => "PF",
            Family::SocialNetwork => "SNF",
            Family::UserActivity => "UAF",
            Family::Likelihood => "LF",
            Family::Fluctuation => "FF",
        }
    }

    /// Column range of the family in the feature vector.
    pub fn range(self) -> Range<usize> {
        match self {
            Family::Profile => 0..5,
            Family::SocialNetwork => 5..9,
            Family::UserActivity => 9..17,
            Family::Likelihood => 17..61,
            Family::Fluctuation => 61..64,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

/// Canonical name of column `index`, e.g. `LF39`.
pub fn feature_name(index: usize) -> String {
    let family = Family::ALL
        .into_iter()
        .find(|f| f.range().contains(&index))
        .expect("feature index out of range");
    format!("{}{}", family.prefix(), index - family.range().start + 1)
}

pub fn feature_names() -> Vec<String> {
    (0..FEATURE_COUNT).map(feature_name).collect()
}

pub fn feature_index(name: &str) -> Option<usize> {
    (0..FEATURE_COUNT).find(|&i| feature_name(i) == name)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Reference "now" for account age.
    pub snapshot_time: DateTime<Utc>,
    /// Additive smoothing on the gap standard deviation, in seconds.
    pub steadiness_epsilon: f64,
    /// UAF8 value for users without a bot score.
    pub bot_score_default: f64,
}

impl ExtractionConfig {
    pub fn new(snapshot_time: DateTime<Utc>) -> Self {
        ExtractionConfig {
            snapshot_time,
            steadiness_epsilon: 1.0,
            bot_score_default: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub user_id: String,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(user_id: impl Into<String>, values: Vec<f64>) -> Result<Self, FeatureError> {
        let user_id = user_id.into();
        if values.len() != FEATURE_COUNT {
            return Err(FeatureError::Length(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite {
                user_id,
                feature: feature_name(i),
            });
        }
        Ok(FeatureVector { user_id, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }
}

fn seconds_between(a: DateTime<Utc>, b: DateTime<Utc>) -> f64 {
    (b - a).as_seconds_f64()
}

fn gaps(timestamps: &[DateTime<Utc>]) -> impl Iterator<Item = f64> + '_ {
    timestamps.windows(2).map(|w| seconds_between(w[0], w[1]))
}

/// PF1..PF5.
pub fn profile_features(profile: &Profile, cfg: &ExtractionConfig) -> Result<[f64; 5], FeatureError> {
    if profile.created_at > cfg.snapshot_time {
        return Err(FeatureError::CreatedAfterSnapshot {
            user_id: profile.user_id.clone(),
            created_at: profile.created_at,
            snapshot: cfg.snapshot_time,
        });
    }
    let age_days = (cfg.snapshot_time - profile.created_at).num_days() as f64;
    let description_len = profile.description.chars().count() as f64;
    Ok([
        age_days,
        profile.screen_name.chars().count() as f64,
        f64::from(u8::from(!profile.description.is_empty())),
        description_len,
        f64::from(u8::from(profile.has_url)),
    ])
}

/// SNF1..SNF4. `imputed_influence` stands in for a missing influence score.
pub fn social_features(record: &UserRecord, imputed_influence: f64) -> [f64; 4] {
    let p = &record.profile;
    [
        p.followee_count as f64,
        p.follower_count as f64,
        p.followee_count as f64 / p.follower_count.max(1) as f64,
        record.influence_score.unwrap_or(imputed_influence),
    ]
}

/// Days covered by the timeline, rounded up, never below one.
fn active_span_days(record: &UserRecord) -> f64 {
    match (record.timeline.first(), record.timeline.last()) {
        (Some(first), Some(last)) => {
            let span = seconds_between(first.timestamp, last.timestamp) / SECONDS_PER_DAY;
            span.ceil().max(1.0)
        }
        _ => 1.0,
    }
}

/// UAF1..UAF8.
pub fn activity_features(record: &UserRecord, cfg: &ExtractionConfig) -> [f64; 8] {
    let timeline = &record.timeline;
    let status_count = record
        .profile
        .declared_status_count
        .unwrap_or(timeline.len() as u64) as f64;
    let bot_score = record.bot_score.unwrap_or(cfg.bot_score_default);
    if timeline.is_empty() {
        return [status_count, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, bot_score];
    }
    let n = timeline.len() as f64;
    let mean_of = |f: fn(&crate::corpus::Post) -> u64| timeline.iter().map(|p| f(p) as f64).sum::<f64>() / n;
    let originals = timeline
        .iter()
        .filter(|p| p.kind == PostKind::OriginalTweet)
        .count() as f64;
    let retweets = n - originals;
    let span = active_span_days(record);
    [
        status_count,
        mean_of(|p| p.mention_count),
        mean_of(|p| p.url_count),
        mean_of(|p| p.hashtag_count),
        originals / span,
        retweets / span,
        retweets / originals.max(1.0),
        bot_score,
    ]
}

/// Shannon entropy (base 2) of the UTC hour-of-day distribution.
pub fn hourly_entropy(timestamps: &[DateTime<Utc>]) -> f64 {
    if timestamps.is_empty() {
        return 0.0;
    }
    let mut hours = [0u32; 24];
    for t in timestamps {
        hours[t.hour() as usize] += 1;
    }
    let total = timestamps.len() as f64;
    hours
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = f64::from(c) / total;
            -p * p.log2()
        })
        .sum()
}

/// Reciprocal of the smoothed population standard deviation of the gaps
/// between consecutive timestamps. Zero when there are fewer than two gaps.
pub fn steadiness(timestamps: &[DateTime<Utc>], cfg: &ExtractionConfig) -> f64 {
    let moments: Moments = gaps(timestamps).collect();
    if moments.count() < 2 {
        return 0.0;
    }
    1.0 / (moments.std_dev() + cfg.steadiness_epsilon)
}

fn weekday_index(t: &DateTime<Utc>) -> usize {
    t.weekday().num_days_from_monday() as usize
}

/// Per-kind aggregates feeding the likelihood block.
struct KindActivity {
    by_weekday: [Vec<DateTime<Utc>>; 7],
    all: Vec<DateTime<Utc>>,
}

impl KindActivity {
    fn collect(record: &UserRecord, kind: PostKind) -> Self {
        let mut by_weekday: [Vec<DateTime<Utc>>; 7] = Default::default();
        let mut all = Vec::new();
        for post in record.timeline.iter().filter(|p| p.kind == kind) {
            by_weekday[weekday_index(&post.timestamp)].push(post.timestamp);
            all.push(post.timestamp);
        }
        KindActivity { by_weekday, all }
    }

    fn shares(&self) -> [f64; 7] {
        let total = self.all.len() as f64;
        self.by_weekday
            .each_ref()
            .map(|day| if total > 0.0 { day.len() as f64 / total } else { 0.0 })
    }

    fn entropies(&self) -> [f64; 7] {
        self.by_weekday.each_ref().map(|day| hourly_entropy(day))
    }

    fn relative_to_peak(&self) -> [f64; 7] {
        let peak = self.by_weekday.iter().map(Vec::len).max().unwrap_or(0) as f64;
        self.by_weekday
            .each_ref()
            .map(|day| if peak > 0.0 { day.len() as f64 / peak } else { 0.0 })
    }
}

/// LF1..LF44.
pub fn likelihood_features(record: &UserRecord, cfg: &ExtractionConfig) -> [f64; 44] {
    let tweets = KindActivity::collect(record, PostKind::OriginalTweet);
    let retweets = KindActivity::collect(record, PostKind::RetweetAction);
    let mut out = [0.0; 44];
    out[0..7].copy_from_slice(&tweets.shares());
    out[7..14].copy_from_slice(&retweets.shares());
    out[14..21].copy_from_slice(&tweets.entropies());
    out[21..28].copy_from_slice(&retweets.entropies());
    out[28] = steadiness(&tweets.all, cfg);
    out[29] = steadiness(&retweets.all, cfg);
    out[30..37].copy_from_slice(&tweets.relative_to_peak());
    out[37..44].copy_from_slice(&retweets.relative_to_peak());
    out
}

/// FF1..FF3.
pub fn fluctuation_features(record: &UserRecord) -> [f64; 3] {
    let received: Moments = record
        .timeline
        .iter()
        .filter(|p| p.kind == PostKind::OriginalTweet)
        .map(|p| p.received_retweet_count as f64)
        .collect();
    let ff1 = if received.count() < 2 { 0.0 } else { received.std_dev() };

    let retweet_times: Vec<DateTime<Utc>> = record
        .timeline
        .iter()
        .filter(|p| p.kind == PostKind::RetweetAction)
        .map(|p| p.timestamp)
        .collect();
    if retweet_times.len() < 2 {
        return [ff1, 0.0, 0.0];
    }
    let log_gaps: Moments = gaps(&retweet_times).map(|dt| (dt + 1.0).ln()).collect();
    [ff1, log_gaps.mean(), log_gaps.std_dev()]
}

/// All 64 features in canonical order.
pub fn extract_all(
    record: &UserRecord,
    cfg: &ExtractionConfig,
    imputed_influence: f64,
) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.extend(profile_features(&record.profile, cfg)?);
    values.extend(social_features(record, imputed_influence));
    values.extend(activity_features(record, cfg));
    values.extend(likelihood_features(record, cfg));
    values.extend(fluctuation_features(record));
    FeatureVector::new(record.user_id(), values)
}

/// Median of the influence scores present on `records`, falling back to
/// [`INFLUENCE_FALLBACK`] when none is present.
pub fn influence_median<'a>(records: impl IntoIterator<Item = &'a UserRecord>) -> f64 {
    let observed: Vec<f64> = records.into_iter().filter_map(|r| r.influence_score).collect();
    median(&observed).unwrap_or(INFLUENCE_FALLBACK)
}
