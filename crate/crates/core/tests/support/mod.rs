//! Independent reference computations and random fixtures for the test
//! targets. Nothing here calls into the library's feature code.

#![allow(dead_code)]

use chrono::{DateTime, Duration, TimeZone, Timelike, Datelike, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use retweet_guard::{Post, PostKind, Profile, UserRecord};

pub fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2019, 3, 4, 0, 0, 0).unwrap()
}

/// A random user whose timeline has bursts, repeated timestamps and long
/// gaps. Timeline is sorted.
pub fn random_record(rng: &mut ChaCha8Rng, id: usize) -> UserRecord {
    let created = base_time() - Duration::days(rng.random_range(0..2000));
    let n = match rng.random_range(0..10) {
        0 => 0,
        1 => 1,
        2 => 2,
        _ => rng.random_range(3..400),
    };
    let retweet_share: f64 = rng.random();
    let mut at = base_time() + Duration::seconds(rng.random_range(0..86_400));
    let mut timeline = Vec::with_capacity(n);
    for i in 0..n {
        let step = match rng.random_range(0..6) {
            0 => 0,
            1 => rng.random_range(1..60),
            2 => rng.random_range(60..3600),
            3 => rng.random_range(3600..86_400),
            _ => rng.random_range(86_400..5 * 86_400),
        };
        at += Duration::seconds(step);
        let kind = if rng.random_bool(retweet_share) {
            PostKind::RetweetAction
        } else {
            PostKind::OriginalTweet
        };
        timeline.push(Post {
            post_id: format!("{id}-{i}"),
            timestamp: at,
            kind,
            mention_count: rng.random_range(0..4),
            url_count: rng.random_range(0..3),
            hashtag_count: rng.random_range(0..5),
            received_retweet_count: if kind == PostKind::OriginalTweet {
                rng.random_range(0..500)
            } else {
                0
            },
        });
    }
    UserRecord {
        profile: Profile {
            user_id: format!("u{id}"),
            screen_name: format!("user{id}"),
            created_at: created,
            description: if rng.random_bool(0.5) { "some words".into() } else { String::new() },
            has_url: rng.random_bool(0.3),
            followee_count: rng.random_range(0..5000),
            follower_count: rng.random_range(0..5000),
            declared_status_count: rng.random_bool(0.5).then(|| rng.random_range(0..10_000)),
            verified: false,
        },
        bot_score: rng.random_bool(0.8).then(|| rng.random()),
        influence_score: rng.random_bool(0.8).then(|| rng.random_range(1.0..=100.0)),
        timeline,
    }
}

pub fn random_records(n: usize, seed: u64) -> Vec<UserRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_record(&mut rng, i)).collect()
}

pub fn snapshot_for(records: &[UserRecord]) -> DateTime<Utc> {
    records
        .iter()
        .flat_map(|r| r.timeline.iter().map(|p| p.timestamp).chain([r.profile.created_at]))
        .max()
        .unwrap_or_else(base_time)
}

pub fn two_pass_mean(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in xs {
        s += x;
    }
    s / xs.len() as f64
}

pub fn two_pass_std(xs: &[f64]) -> f64 {
    let m = two_pass_mean(xs);
    let mut ss = 0.0;
    for x in xs {
        ss += (x - m) * (x - m);
    }
    (ss / xs.len() as f64).sqrt()
}

/// Entropy by scanning every hour bucket and summing the terms directly.
pub fn entropy_oracle(ts: &[DateTime<Utc>]) -> f64 {
    if ts.is_empty() {
        return 0.0;
    }
    let mut h = 0.0;
    for hour in 0..24u32 {
        let c = ts.iter().filter(|t| t.hour() == hour).count();
        if c > 0 {
            let p = c as f64 / ts.len() as f64;
            h -= p * (p.ln() / std::f64::consts::LN_2);
        }
    }
    h
}

pub fn gaps_seconds(ts: &[DateTime<Utc>]) -> Vec<f64> {
    ts.windows(2)
        .map(|w| (w[1].timestamp() - w[0].timestamp()) as f64)
        .collect()
}

pub fn steadiness_oracle(ts: &[DateTime<Utc>]) -> f64 {
    let g = gaps_seconds(ts);
    if g.len() < 2 {
        return 0.0;
    }
    1.0 / (two_pass_std(&g) + 1.0)
}

fn times_of(record: &UserRecord, kind: PostKind) -> Vec<DateTime<Utc>> {
    record.timeline.iter().filter(|p| p.kind == kind).map(|p| p.timestamp).collect()
}

/// LF1..LF44 recomputed from the definitions.
pub fn likelihood_oracle(record: &UserRecord) -> Vec<f64> {
    let mut out = Vec::with_capacity(44);
    let kinds = [PostKind::OriginalTweet, PostKind::RetweetAction];
    let per_day = |kind: PostKind, day: u32| -> Vec<DateTime<Utc>> {
        times_of(record, kind)
            .into_iter()
            .filter(|t| t.weekday().num_days_from_monday() == day)
            .collect()
    };
    for kind in kinds {
        let total = times_of(record, kind).len();
        for day in 0..7 {
            let c = per_day(kind, day).len();
            out.push(if total == 0 { 0.0 } else { c as f64 / total as f64 });
        }
    }
    for kind in kinds {
        for day in 0..7 {
            out.push(entropy_oracle(&per_day(kind, day)));
        }
    }
    for kind in kinds {
        out.push(steadiness_oracle(&times_of(record, kind)));
    }
    for kind in kinds {
        let counts: Vec<usize> = (0..7).map(|d| per_day(kind, d).len()).collect();
        let peak = *counts.iter().max().unwrap();
        for c in counts {
            out.push(if peak == 0 { 0.0 } else { c as f64 / peak as f64 });
        }
    }
    out
}

pub fn fluctuation_oracle(record: &UserRecord) -> [f64; 3] {
    let received: Vec<f64> = record
        .timeline
        .iter()
        .filter(|p| p.kind == PostKind::OriginalTweet)
        .map(|p| p.received_retweet_count as f64)
        .collect();
    let ff1 = if received.len() < 2 { 0.0 } else { two_pass_std(&received) };
    let rt = times_of(record, PostKind::RetweetAction);
    if rt.len() < 2 {
        return [ff1, 0.0, 0.0];
    }
    let g: Vec<f64> = gaps_seconds(&rt).iter().map(|d| (d + 1.0).ln()).collect();
    [ff1, two_pass_mean(&g), two_pass_std(&g)]
}

pub fn all_times(record: &UserRecord) -> Vec<DateTime<Utc>> {
    record.timeline.iter().map(|p| p.timestamp).collect()
}
