//! Retweet-thread timing statistics and re-ranking flows after customer
//! retweets are filtered out.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("tweet {tweet_id:?}: {removed} customer retweeters exceed the retweet count {count}")]
    NegativeCount {
        tweet_id: String,
        count: u64,
        removed: u64,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetweetEvent {
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetweetThread {
    pub tweet_id: String,
    /// May exceed `events.len()` when only part of the thread was captured.
    pub retweet_count: u64,
    pub events: Vec<RetweetEvent>,
}

impl RetweetThread {
    pub fn new(tweet_id: impl Into<String>, retweet_count: u64, mut events: Vec<RetweetEvent>) -> Self {
        events.sort_by_key(|e| e.timestamp);
        RetweetThread {
            tweet_id: tweet_id.into(),
            retweet_count,
            events,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreadStats {
    /// Seconds between the first and last retweet.
    pub lifespan: f64,
    /// Mean absolute deviation of the inter-arrival gaps, in seconds.
    pub arr_mad: f64,
}

/// `None` for threads with fewer than two events.
pub fn thread_stats(thread: &RetweetThread) -> Option<ThreadStats> {
    if thread.events.len() < 2 {
        return None;
    }
    let gaps: Vec<f64> = thread
        .events
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp).as_seconds_f64())
        .collect();
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let arr_mad = gaps.iter().map(|g| (g - mean_gap).abs()).sum::<f64>() / gaps.len() as f64;
    let first = thread.events.first()?.timestamp;
    let last = thread.events.last()?.timestamp;
    Some(ThreadStats {
        lifespan: (last - first).as_seconds_f64(),
        arr_mad,
    })
}

/// Counts of threads over `log10(x + 1)` bins of lifespan (rows) and
/// arrival MAD (columns). Values beyond the grid land in the last bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub bin_width: f64,
    pub counts: Vec<Vec<u64>>,
}

pub const HEATMAP_BINS: usize = 16;
pub const HEATMAP_BIN_WIDTH: f64 = 0.5;

/// Bin of `log10(value + 1)`.
pub fn log_bin(value: f64, width: f64, bins: usize) -> usize {
    let v = (value.max(0.0) + 1.0).log10();
    ((v / width).floor() as usize).min(bins - 1)
}

pub fn heatmap_bins(stats: &[ThreadStats]) -> Heatmap {
    let mut counts = vec![vec![0u64; HEATMAP_BINS]; HEATMAP_BINS];
    for s in stats {
        let r = log_bin(s.lifespan, HEATMAP_BIN_WIDTH, HEATMAP_BINS);
        let c = log_bin(s.arr_mad, HEATMAP_BIN_WIDTH, HEATMAP_BINS);
        counts[r][c] += 1;
    }
    Heatmap {
        bin_width: HEATMAP_BIN_WIDTH,
        counts,
    }
}

impl Heatmap {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// CSV with the lower log-edge of each bin as row and column headers.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let edges: Vec<String> = (0..self.counts.len())
            .map(|i| format!("{:.1}", i as f64 * self.bin_width))
            .collect();
        writeln!(out, "log_lifespan\\log_arr_mad,{}", edges.join(","))?;
        for (edge, row) in edges.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(out, "{edge},{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TweetRetweeters {
    pub tweet_id: String,
    pub retweet_count: u64,
    pub retweeters: Vec<String>,
}

pub const FLOW_BINS: usize = 5;

/// Tweet flows between retweet-count bins before and after filtering.
/// Both sides share the same equal-width edges over `[0, max before]`;
/// the last bin is closed on the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub edges: Vec<f64>,
    /// `flows[before][after]`.
    pub flows: [[u64; FLOW_BINS]; FLOW_BINS],
    pub before_counts: Vec<u64>,
    pub after_counts: Vec<u64>,
}

impl FlowMatrix {
    pub fn total(&self) -> u64 {
        self.flows.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> [u64; FLOW_BINS] {
        self.flows.map(|row| row.iter().sum())
    }

    pub fn column_sums(&self) -> [u64; FLOW_BINS] {
        std::array::from_fn(|c| self.flows.iter().map(|row| row[c]).sum())
    }

    /// Population of each bin before filtering.
    pub fn before_populations(&self) -> [u64; FLOW_BINS] {
        populations(&self.before_counts, &self.edges)
    }

    pub fn after_populations(&self) -> [u64; FLOW_BINS] {
        populations(&self.after_counts, &self.edges)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..FLOW_BINS).all(|i| (0..FLOW_BINS).all(|j| i == j || self.flows[i][j] == 0))
    }

    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        let labels: Vec<String> = (0..FLOW_BINS)
            .map(|b| format!("[{:.1};{:.1}{}", self.edges[b], self.edges[b + 1], if b + 1 == FLOW_BINS { "]" } else { ")" }))
            .collect();
        writeln!(out, "before\\after,{}", labels.join(","))?;
        for (label, row) in labels.iter().zip(&self.flows) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(out, "{label},{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn bin_of(count: u64, edges: &[f64]) -> usize {
    let max = edges[FLOW_BINS];
    if max <= 0.0 {
        return 0;
    }
    let width = max / FLOW_BINS as f64;
    ((count as f64 / width).floor() as usize).min(FLOW_BINS - 1)
}

fn populations(counts: &[u64], edges: &[f64]) -> [u64; FLOW_BINS] {
    let mut out = [0; FLOW_BINS];
    for &c in counts {
        out[bin_of(c, edges)] += 1;
    }
    out
}

/// Removes customer retweets from every tweet's count and tallies how the
/// tweets move between the five equal-width count bins.
pub fn filter_and_rebin(tweets: &[TweetRetweeters], customers: &HashSet<String>) -> Result<FlowMatrix, AnalysisError> {
    let mut before = Vec::with_capacity(tweets.len());
    let mut after = Vec::with_capacity(tweets.len());
    for t in tweets {
        let distinct: HashSet<&str> = t.retweeters.iter().map(String::as_str).collect();
        let removed = distinct.iter().filter(|id| customers.contains(**id)).count() as u64;
        if removed > t.retweet_count {
            return Err(AnalysisError::NegativeCount {
                tweet_id: t.tweet_id.clone(),
                count: t.retweet_count,
                removed,
            });
        }
        before.push(t.retweet_count);
        after.push(t.retweet_count - removed);
    }
    let max = before.iter().copied().max().unwrap_or(0) as f64;
    let edges: Vec<f64> = (0..=FLOW_BINS).map(|b| max * b as f64 / FLOW_BINS as f64).collect();
    let mut flows = [[0u64; FLOW_BINS]; FLOW_BINS];
    for (&b, &a) in before.iter().zip(&after) {
        flows[bin_of(b, &edges)][bin_of(a, &edges)] += 1;
    }
    Ok(FlowMatrix {
        edges,
        flows,
        before_counts: before,
        after_counts: after,
    })
}

fn read_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, AnalysisError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| AnalysisError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), AnalysisError> {
    let mut out = io::BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Thread file: one `RetweetThread` JSON object per line.
pub fn load_threads(path: impl AsRef<Path>) -> Result<Vec<RetweetThread>, AnalysisError> {
    let threads: Vec<RetweetThread> = read_jsonl(BufReader::new(File::open(path)?))?;
    Ok(threads
        .into_iter()
        .map(|t| RetweetThread::new(t.tweet_id, t.retweet_count, t.events))
        .collect())
}

pub fn save_threads(threads: &[RetweetThread], path: impl AsRef<Path>) -> Result<(), AnalysisError> {
    write_jsonl(threads, path.as_ref())
}

/// Tweet file: one `TweetRetweeters` JSON object per line.
pub fn load_tweets(path: impl AsRef<Path>) -> Result<Vec<TweetRetweeters>, AnalysisError> {
    read_jsonl(BufReader::new(File::open(path)?))
}

pub fn save_tweets(tweets: &[TweetRetweeters], path: impl AsRef<Path>) -> Result<(), AnalysisError> {
    write_jsonl(tweets, path.as_ref())
}
