//! Seeded synthetic corpora.
//!
//! Each [`BehaviorPreset`] describes one population: follower counts are
//! log-normal, the followee/follower ratio is gamma distributed, daily post
//! counts are Poisson with per-weekday multipliers, and post times follow a
//! 24-bucket hourly profile. Users are generated independently from
//! per-user random streams, so output does not depend on thread count.

use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{RetweetEvent, RetweetThread, TweetRetweeters};
use crate::corpus::{Class, Corpus, CorpusError, LabelMap, Post, PostKind, Profile, UserRecord, MAX_TIMELINE};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("preset {preset:?}: {message}")]
    InvalidPreset { preset: String, message: String },
    #[error("span must be at least 7 days, got {0}")]
    Span(u32),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BehaviorPreset {
    pub name: String,
    pub class: Class,
    pub follower_median: f64,
    pub follower_log_sigma: f64,
    pub follow_ratio_mean: f64,
    pub follow_ratio_shape: f64,
    /// Mean original tweets per day before weekday weighting.
    pub original_rate: f64,
    pub retweet_rate: f64,
    /// 24 non-negative weights, UTC hour 0 first.
    pub hourly_weights: Vec<f64>,
    /// 7 non-negative weights, Monday first; normalized to mean 1.
    pub original_weekday_weights: Vec<f64>,
    pub retweet_weekday_weights: Vec<f64>,
    pub received_retweet_mean: f64,
    pub mention_mean: f64,
    pub url_mean: f64,
    pub hashtag_mean: f64,
    pub bot_score_alpha: f64,
    pub bot_score_beta: f64,
    pub bot_score_missing: f64,
    pub influence_mean: f64,
    pub influence_sd: f64,
    pub influence_missing: f64,
    pub description_probability: f64,
    pub url_probability: f64,
    pub min_account_age_days: u32,
    pub max_account_age_days: u32,
}

fn diurnal() -> Vec<f64> {
    (0..24)
        .map(|h| {
            let phase = (h as f64 - 15.0) / 24.0 * std::f64::consts::TAU;
            1.2 + phase.cos()
        })
        .collect()
}

fn concentrated(hours: &[usize]) -> Vec<f64> {
    (0..24).map(|h| if hours.contains(&h) { 10.0 } else { 0.2 }).collect()
}

const FLAT_WEEK: [f64; 7] = [1.0; 7];
const TUE_FRI: [f64; 7] = [0.4, 3.0, 0.4, 0.4, 3.0, 0.4, 0.4];

impl BehaviorPreset {
    pub fn genuine() -> Self {
        BehaviorPreset {
            name: "genuine".into(),
            class: Class::Genuine,
            follower_median: 300.0,
            follower_log_sigma: 1.0,
            follow_ratio_mean: 1.0,
            follow_ratio_shape: 4.0,
            original_rate: 3.0,
            retweet_rate: 1.0,
            hourly_weights: diurnal(),
            original_weekday_weights: FLAT_WEEK.to_vec(),
            retweet_weekday_weights: FLAT_WEEK.to_vec(),
            received_retweet_mean: 2.0,
            mention_mean: 0.6,
            url_mean: 0.2,
            hashtag_mean: 0.3,
            bot_score_alpha: 2.0,
            bot_score_beta: 8.0,
            bot_score_missing: 0.05,
            influence_mean: 40.0,
            influence_sd: 12.0,
            influence_missing: 0.1,
            description_probability: 0.8,
            url_probability: 0.3,
            min_account_age_days: 200,
            max_account_age_days: 3000,
        }
    }

    /// Normal customer of a credit-based service.
    pub fn customer() -> Self {
        BehaviorPreset {
            name: "customer".into(),
            class: Class::Normal,
            follower_median: 200.0,
            follow_ratio_mean: 5.0,
            original_rate: 1.5,
            retweet_rate: 12.0,
            hourly_weights: concentrated(&[9, 10, 21, 22]),
            retweet_weekday_weights: TUE_FRI.to_vec(),
            received_retweet_mean: 15.0,
            bot_score_alpha: 4.0,
            bot_score_beta: 4.0,
            influence_mean: 35.0,
            influence_sd: 10.0,
            min_account_age_days: 30,
            max_account_age_days: 1500,
            ..Self::genuine()
        }
    }

    pub fn bot() -> Self {
        BehaviorPreset {
            name: "bot".into(),
            class: Class::Bot,
            follower_median: 60.0,
            follow_ratio_mean: 8.0,
            original_rate: 0.5,
            retweet_rate: 25.0,
            hourly_weights: concentrated(&[3, 4]),
            retweet_weekday_weights: TUE_FRI.to_vec(),
            received_retweet_mean: 8.0,
            mention_mean: 0.1,
            bot_score_alpha: 8.0,
            bot_score_beta: 2.0,
            influence_mean: 15.0,
            influence_sd: 6.0,
            description_probability: 0.2,
            min_account_age_days: 7,
            max_account_age_days: 400,
            ..Self::customer()
        }
    }

    pub fn promotional() -> Self {
        BehaviorPreset {
            name: "promotional".into(),
            class: Class::Promotional,
            follower_median: 800.0,
            follow_ratio_mean: 3.0,
            original_rate: 8.0,
            retweet_rate: 8.0,
            hourly_weights: concentrated(&[12, 13, 18]),
            original_weekday_weights: TUE_FRI.to_vec(),
            received_retweet_mean: 25.0,
            url_mean: 1.2,
            hashtag_mean: 2.0,
            bot_score_alpha: 5.0,
            bot_score_beta: 3.0,
            influence_mean: 50.0,
            ..Self::customer()
        }
    }

    pub fn for_class(class: Class) -> Self {
        match class {
            Class::Genuine => Self::genuine(),
            Class::Bot => Self::bot(),
            Class::Promotional => Self::promotional(),
            Class::Normal => Self::customer(),
        }
    }

    /// Linear interpolation of every numeric parameter; `t = 0` is `self`.
    /// Name and class come from whichever side `t` is closer to.
    pub fn blend(&self, other: &Self, t: f64) -> Self {
        let mix = |a: f64, b: f64| a + (b - a) * t;
        let mix_vec = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| mix(*x, *y)).collect();
        let mix_days = |a: u32, b: u32| mix(f64::from(a), f64::from(b)).round() as u32;
        let base = if t < 0.5 { self } else { other };
        BehaviorPreset {
            name: format!("{}~{}@{t}", self.name, other.name),
            class: base.class,
            follower_median: mix(self.follower_median, other.follower_median),
            follower_log_sigma: mix(self.follower_log_sigma, other.follower_log_sigma),
            follow_ratio_mean: mix(self.follow_ratio_mean, other.follow_ratio_mean),
            follow_ratio_shape: mix(self.follow_ratio_shape, other.follow_ratio_shape),
            original_rate: mix(self.original_rate, other.original_rate),
            retweet_rate: mix(self.retweet_rate, other.retweet_rate),
            hourly_weights: mix_vec(&self.hourly_weights, &other.hourly_weights),
            original_weekday_weights: mix_vec(&self.original_weekday_weights, &other.original_weekday_weights),
            retweet_weekday_weights: mix_vec(&self.retweet_weekday_weights, &other.retweet_weekday_weights),
            received_retweet_mean: mix(self.received_retweet_mean, other.received_retweet_mean),
            mention_mean: mix(self.mention_mean, other.mention_mean),
            url_mean: mix(self.url_mean, other.url_mean),
            hashtag_mean: mix(self.hashtag_mean, other.hashtag_mean),
            bot_score_alpha: mix(self.bot_score_alpha, other.bot_score_alpha),
            bot_score_beta: mix(self.bot_score_beta, other.bot_score_beta),
            bot_score_missing: mix(self.bot_score_missing, other.bot_score_missing),
            influence_mean: mix(self.influence_mean, other.influence_mean),
            influence_sd: mix(self.influence_sd, other.influence_sd),
            influence_missing: mix(self.influence_missing, other.influence_missing),
            description_probability: mix(self.description_probability, other.description_probability),
            url_probability: mix(self.url_probability, other.url_probability),
            min_account_age_days: mix_days(self.min_account_age_days, other.min_account_age_days),
            max_account_age_days: mix_days(self.max_account_age_days, other.max_account_age_days),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |message: String| {
            Err(SynthError::InvalidPreset {
                preset: self.name.clone(),
                message,
            })
        };
        let positive = [
            ("follower_median", self.follower_median),
            ("follow_ratio_mean", self.follow_ratio_mean),
            ("follow_ratio_shape", self.follow_ratio_shape),
            ("bot_score_alpha", self.bot_score_alpha),
            ("bot_score_beta", self.bot_score_beta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("follower_log_sigma", self.follower_log_sigma),
            ("original_rate", self.original_rate),
            ("retweet_rate", self.retweet_rate),
            ("received_retweet_mean", self.received_retweet_mean),
            ("mention_mean", self.mention_mean),
            ("url_mean", self.url_mean),
            ("hashtag_mean", self.hashtag_mean),
            ("influence_sd", self.influence_sd),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be non-negative, got {v}"));
            }
        }
        let probabilities = [
            ("bot_score_missing", self.bot_score_missing),
            ("influence_missing", self.influence_missing),
            ("description_probability", self.description_probability),
            ("url_probability", self.url_probability),
        ];
        for (name, v) in probabilities {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        let weights = [
            ("hourly_weights", &self.hourly_weights, 24),
            ("original_weekday_weights", &self.original_weekday_weights, 7),
            ("retweet_weekday_weights", &self.retweet_weekday_weights, 7),
        ];
        for (name, w, len) in weights {
            if w.len() != len {
                return fail(format!("{name} needs {len} entries, got {}", w.len()));
            }
            if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) || w.iter().sum::<f64>() <= 0.0 {
                return fail(format!("{name} must be non-negative with a positive sum"));
            }
        }
        if self.min_account_age_days > self.max_account_age_days {
            return fail("min_account_age_days exceeds max_account_age_days".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetCount {
    #[serde(flatten)]
    pub preset: BehaviorPreset,
    pub count: usize,
}

/// Keyed text (TOML) generator configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub span_days: u32,
    /// First day of the observation window, UTC midnight.
    #[serde(default = "default_start")]
    pub start: DateTime<Utc>,
    #[serde(rename = "preset")]
    pub presets: Vec<PresetCount>,
}

fn default_start() -> DateTime<Utc> {
    // a Monday
    Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap()
}

impl SynthConfig {
    pub fn new(presets: Vec<(BehaviorPreset, usize)>, span_days: u32) -> Self {
        SynthConfig {
            span_days,
            start: default_start(),
            presets: presets
                .into_iter()
                .map(|(preset, count)| PresetCount { preset, count })
                .collect(),
        }
    }

    /// Genuine users against normal customers.
    pub fn binary(genuine: usize, customers: usize, span_days: u32) -> Self {
        Self::new(
            vec![(BehaviorPreset::genuine(), genuine), (BehaviorPreset::customer(), customers)],
            span_days,
        )
    }

    /// All four classes.
    pub fn four_class(counts: [usize; 4], span_days: u32) -> Self {
        Self::new(
            Class::ALL
                .iter()
                .zip(counts)
                .map(|(&c, n)| (BehaviorPreset::for_class(c), n))
                .collect(),
            span_days,
        )
    }

    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        toml::from_str(text).map_err(|e| SynthError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn snapshot_time(&self) -> DateTime<Utc> {
        self.start + Duration::days(i64::from(self.span_days))
    }
}

fn user_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn poisson(rng: &mut impl Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

fn normalized_week(weights: &[f64]) -> Vec<f64> {
    let mean = weights.iter().sum::<f64>() / 7.0;
    weights.iter().map(|w| w / mean).collect()
}

fn generate_user(preset: &BehaviorPreset, user_index: usize, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> UserRecord {
    let user_id = format!("{}_{user_index:05}", preset.name);
    let followers = LogNormal::new(preset.follower_median.ln(), preset.follower_log_sigma)
        .expect("validated")
        .sample(rng)
        .round() as u64;
    let ratio = Gamma::new(preset.follow_ratio_shape, preset.follow_ratio_mean / preset.follow_ratio_shape)
        .expect("validated")
        .sample(rng);
    let followees = (followers.max(1) as f64 * ratio).round() as u64;
    let age_days = rng.random_range(preset.min_account_age_days..=preset.max_account_age_days);
    let created_at = cfg.start - Duration::days(i64::from(age_days)) + Duration::seconds(rng.random_range(0..86_400));

    let hours = WeightedIndex::new(&preset.hourly_weights).expect("validated");
    let original_week = normalized_week(&preset.original_weekday_weights);
    let retweet_week = normalized_week(&preset.retweet_weekday_weights);
    let mut timeline = Vec::new();
    for day in 0..cfg.span_days {
        let day_start = cfg.start + Duration::days(i64::from(day));
        let weekday = day_start.weekday().num_days_from_monday() as usize;
        let n_orig = poisson(rng, preset.original_rate * original_week[weekday]);
        let n_rt = poisson(rng, preset.retweet_rate * retweet_week[weekday]);
        for (kind, n) in [(PostKind::OriginalTweet, n_orig), (PostKind::RetweetAction, n_rt)] {
            for _ in 0..n {
                let hour = hours.sample(rng) as i64;
                let at = day_start + Duration::seconds(hour * 3600 + rng.random_range(0..3600));
                let original = kind == PostKind::OriginalTweet;
                timeline.push(Post {
                    post_id: String::new(),
                    timestamp: at,
                    kind,
                    mention_count: poisson(rng, preset.mention_mean),
                    url_count: poisson(rng, preset.url_mean),
                    hashtag_count: poisson(rng, preset.hashtag_mean),
                    received_retweet_count: if original { poisson(rng, preset.received_retweet_mean) } else { 0 },
                });
            }
        }
    }
    timeline.sort_by_key(|p| p.timestamp);
    let total_posts = timeline.len();
    if timeline.len() > MAX_TIMELINE {
        timeline.drain(..timeline.len() - MAX_TIMELINE);
    }
    for (i, p) in timeline.iter_mut().enumerate() {
        p.post_id = format!("{user_id}_p{i}");
    }

    let bot_score = (!rng.random_bool(preset.bot_score_missing)).then(|| {
        Beta::new(preset.bot_score_alpha, preset.bot_score_beta)
            .expect("validated")
            .sample(rng)
    });
    let influence_score = (!rng.random_bool(preset.influence_missing)).then(|| {
        Normal::new(preset.influence_mean, preset.influence_sd)
            .expect("validated")
            .sample(rng)
            .clamp(1.0, 100.0)
    });
    let has_description = rng.random_bool(preset.description_probability);
    let description = if has_description {
        let words = rng.random_range(2..12);
        (0..words).map(|w| format!("w{w}")).collect::<Vec<_>>().join(" ")
    } else {
        String::new()
    };
    let screen_digits = rng.random_range(0..6);
    let suffix: String = (0..screen_digits).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect();
    let declared_extra = poisson(rng, 50.0);
    UserRecord {
        profile: Profile {
            user_id: user_id.clone(),
            screen_name: format!("{}{suffix}", preset.name),
            created_at,
            description,
            has_url: rng.random_bool(preset.url_probability),
            followee_count: followees,
            follower_count: followers,
            declared_status_count: Some(total_posts as u64 + declared_extra),
            verified: false,
        },
        bot_score,
        influence_score,
        timeline,
    }
}

/// Generates every preset's users in order. Deterministic for a fixed seed.
pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<(Corpus, LabelMap), SynthError> {
    if cfg.span_days < 7 {
        return Err(SynthError::Span(cfg.span_days));
    }
    let mut jobs = Vec::new();
    for pc in &cfg.presets {
        pc.preset.validate()?;
        if pc.count == 0 {
            return Err(SynthError::InvalidPreset {
                preset: pc.preset.name.clone(),
                message: "count must be at least 1".into(),
            });
        }
        for i in 0..pc.count {
            jobs.push((&pc.preset, i));
        }
    }
    let names: HashSet<&str> = cfg.presets.iter().map(|p| p.preset.name.as_str()).collect();
    if names.len() != cfg.presets.len() {
        return Err(SynthError::Config("preset names must be unique".into()));
    }
    let records: Vec<UserRecord> = jobs
        .par_iter()
        .enumerate()
        .map(|(global, (preset, i))| generate_user(preset, *i, cfg, &mut user_rng(seed, global)))
        .collect();
    let mut labels = LabelMap::new();
    for (r, (preset, _)) in records.iter().zip(&jobs) {
        labels.insert(r.user_id(), preset.class);
    }
    let corpus = Corpus::new(records, Some(cfg.snapshot_time()))?;
    Ok((corpus, labels))
}

/// Synthetic tweets with retweeter lists drawn from the corpus. Roughly
/// half are promoted and draw most retweeters from customers.
pub fn generate_tweets(corpus: &Corpus, labels: &LabelMap, n: usize, seed: u64) -> Vec<TweetRetweeters> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (customers, genuine): (Vec<&str>, Vec<&str>) = corpus
        .records()
        .iter()
        .map(UserRecord::user_id)
        .partition(|id| labels.get(id).is_some_and(Class::is_customer));
    (0..n)
        .map(|i| {
            let promoted = rng.random_bool(0.5);
            let captured = rng.random_range(0..=40usize);
            let mut retweeters = Vec::with_capacity(captured);
            for _ in 0..captured {
                let from_customers = if promoted { rng.random_bool(0.85) } else { rng.random_bool(0.1) };
                let pool = if from_customers && !customers.is_empty() { &customers } else { &genuine };
                if let Some(id) = pool.choose(&mut rng) {
                    retweeters.push(id.to_string());
                }
            }
            retweeters.sort();
            retweeters.dedup();
            let uncaptured = poisson(&mut rng, if promoted { 5.0 } else { 20.0 });
            TweetRetweeters {
                tweet_id: format!("tweet_{i:05}"),
                retweet_count: retweeters.len() as u64 + uncaptured,
                retweeters,
            }
        })
        .collect()
}

/// Retweet threads: promoted threads arrive in near-regular bursts, organic
/// ones with heavy-tailed gaps.
pub fn generate_threads(corpus: &Corpus, labels: &LabelMap, n: usize, seed: u64) -> Vec<RetweetThread> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<&str> = corpus.records().iter().map(UserRecord::user_id).collect();
    let customers: Vec<&str> = ids.iter().copied().filter(|id| labels.get(id).is_some_and(Class::is_customer)).collect();
    let start = corpus.snapshot_time() - Duration::days(30);
    (0..n)
        .map(|i| {
            let promoted = rng.random_bool(0.5);
            let size = rng.random_range(2..=60usize);
            let pool = if promoted && !customers.is_empty() { &customers } else { &ids };
            let mut at = start + Duration::seconds(rng.random_range(0..20 * 86_400));
            let mut events = Vec::with_capacity(size);
            for _ in 0..size {
                let Some(user) = pool.choose(&mut rng) else { break };
                events.push(RetweetEvent {
                    user_id: user.to_string(),
                    timestamp: at,
                });
                let gap = if promoted {
                    rng.random_range(25.0..35.0)
                } else {
                    LogNormal::new(7.0, 2.0).expect("constant parameters").sample(&mut rng)
                };
                at += Duration::milliseconds((gap * 1000.0) as i64);
            }
            let extra = poisson(&mut rng, 3.0);
            RetweetThread::new(format!("thread_{i:05}"), events.len() as u64 + extra, events)
        })
        .collect()
}
