//! Event-stream ingestion: trend manifests, tweet files, and the sliding
//! windows that turn a trend's tweets into a fixed-length series of windows.
//!
//! File formats are line-delimited JSON: one manifest record or one tweet
//! per line. Timestamps are integer epoch seconds, UTC.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth class of a trend. Promoted is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Promoted,
    Organic,
}

impl Label {
    pub fn is_promoted(self) -> bool {
        matches!(self, Label::Promoted)
    }
}

/// Account metadata for a tweet's author or originator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserMeta {
    pub user_id: String,
    pub followers: u64,
    pub followees: u64,
    pub favorites: u64,
    pub statuses: u64,
    pub listed: u64,
}

/// One timestamped event with author metadata, entities, and tokens.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub timestamp: i64,
    pub hashtag_list: Vec<String>,
    pub mention_list: Vec<String>,
    pub url_count: u64,
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub emoticon_tokens: Vec<String>,
    pub is_retweet: bool,
    pub sender: UserMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub originator: Option<UserMeta>,
    pub is_reply: bool,
    /// Raw text, accepted on input as an alternative to pre-split tokens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// A labeled hashtag with its trending time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRecord {
    pub hashtag: String,
    pub trending_time: i64,
    pub label: Label,
}

/// Tweets (by index into the trend's tweet sequence) falling in one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSlice {
    pub start: i64,
    pub end: i64,
    pub tweet_indices: Vec<usize>,
}

/// Sliding-window geometry: window length, slide, and how the series of
/// windows is anchored around the trending point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowingConfig {
    /// Window length in seconds (default 6 hours).
    pub window_length: i64,
    /// Slide between consecutive windows in seconds (default 20 minutes).
    pub slide: i64,
    /// Number of windows per trend (default 120).
    pub series_length: usize,
    /// Windows whose end precedes or coincides with the trending point
    /// (default 60, so window 59 ends exactly at trending time).
    pub points_before_trending: usize,
}

impl Default for WindowingConfig {
    fn default() -> Self {
        WindowingConfig {
            window_length: 21_600,
            slide: 1_200,
            series_length: 120,
            points_before_trending: 60,
        }
    }
}

impl WindowingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_length <= 0 || self.slide <= 0 {
            return Err(Error::InvalidParameter(
                "window_length and slide must be positive".into(),
            ));
        }
        if self.series_length == 0 || self.points_before_trending > self.series_length {
            return Err(Error::InvalidParameter(
                "series_length must be positive and cover points_before_trending".into(),
            ));
        }
        Ok(())
    }

    pub fn slide_minutes(&self) -> i64 {
        self.slide / 60
    }
}

/// Emoticon tokens recognized during tokenization, longest-match first.
const EMOTICON_TABLE: &[&str] = &[
    ":-)", ":-(", ":-d", ":-p", ";-)", ":')", ":'(", ":-/", ":-|", ":-o", ":)", ":(", ":d", ":p",
    ";)", ":o", ":/", ":|", "=)", "=(", "=d", "xd", "<3", "</3", ":*", "^_^", "-_-", "t_t",
];

/// Split raw text into lowercase word tokens and emoticon tokens.
///
/// Emoticons are matched against a fixed table first so punctuation
/// splitting cannot tear them apart; the remainder is lowercased and split
/// on anything that is not alphanumeric or an apostrophe.
pub fn tokenize(text: &str) -> (Vec<String>, Vec<String>) {
    let lower = text.to_lowercase();
    let mut emoticons = Vec::new();
    let mut stripped = String::with_capacity(lower.len());
    let mut rest = lower.as_str();
    'outer: while !rest.is_empty() {
        for emo in EMOTICON_TABLE {
            if rest.starts_with(emo) {
                emoticons.push((*emo).to_string());
                stripped.push(' ');
                rest = &rest[emo.len()..];
                continue 'outer;
            }
        }
        let ch = rest.chars().next().unwrap();
        stripped.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    let tokens = stripped
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect();
    (tokens, emoticons)
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parse and validate a single manifest line.
pub fn parse_manifest_line(line: &str) -> std::result::Result<TrendRecord, String> {
    let record: TrendRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if record.hashtag.is_empty() {
        return Err("empty hashtag".into());
    }
    if record.trending_time <= 0 {
        return Err("trending_time must be positive".into());
    }
    Ok(record)
}

/// Parse and validate a single tweet line. Raw `text` is tokenized here when
/// pre-split tokens are absent, so downstream modules never re-tokenize.
pub fn parse_tweet_line(line: &str) -> std::result::Result<TweetRecord, String> {
    let mut record: TweetRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if record.timestamp <= 0 {
        return Err("timestamp must be positive".into());
    }
    if record.is_retweet != record.originator.is_some() {
        return Err("originator must be present exactly when is_retweet is true".into());
    }
    if record.tokens.is_empty() {
        if let Some(text) = record.text.take() {
            let (tokens, emoticons) = tokenize(&text);
            record.tokens = tokens;
            if record.emoticon_tokens.is_empty() {
                record.emoticon_tokens = emoticons;
            }
        }
    }
    record.text = None;
    for tag in &mut record.hashtag_list {
        *tag = tag.to_lowercase();
    }
    Ok(record)
}

/// Load a trend manifest: one JSON object per line with keys `hashtag`,
/// `trending_time`, `label`. Duplicate hashtags are rejected.
pub fn load_manifest(path: &Path) -> Result<Vec<TrendRecord>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_manifest_line(&line).map_err(|msg| parse_error(path, idx + 1, msg))?;
        if !seen.insert(record.hashtag.clone()) {
            return Err(Error::DuplicateHashtag {
                hashtag: record.hashtag,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Default half-span around the trending point: two days.
pub const DEFAULT_HALF_SPAN: i64 = 172_800;

/// Load the tweets of one trend: records containing `hashtag` whose
/// timestamp lies within `center ± half_span` (closed interval), sorted
/// ascending by timestamp. An empty result is legal.
pub fn load_tweets(
    path: &Path,
    hashtag: &str,
    center: i64,
    half_span: i64,
) -> Result<Vec<TweetRecord>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let hashtag = hashtag.to_lowercase();
    let mut tweets = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_tweet_line(&line).map_err(|msg| parse_error(path, idx + 1, msg))?;
        if (record.timestamp - center).abs() <= half_span && record.hashtag_list.contains(&hashtag)
        {
            tweets.push(record);
        }
    }
    tweets.sort_by_key(|t| t.timestamp);
    Ok(tweets)
}

/// Slice a trend's sorted tweets into `series_length` sliding windows.
///
/// Window `i` (0-indexed) ends at
/// `trending_time + (i - points_before_trending + 1) * slide` and covers
/// `[end - window_length, end)`. Windows may be empty.
pub fn window_slices(
    tweets: &[TweetRecord],
    config: &WindowingConfig,
    trending_time: i64,
) -> Result<Vec<WindowSlice>> {
    config.validate()?;
    debug_assert!(tweets.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    let timestamps: Vec<i64> = tweets.iter().map(|t| t.timestamp).collect();
    let mut slices = Vec::with_capacity(config.series_length);
    for i in 0..config.series_length {
        let offset = i as i64 - config.points_before_trending as i64 + 1;
        let end = trending_time + offset * config.slide;
        let start = end - config.window_length;
        let lo = timestamps.partition_point(|&t| t < start);
        let hi = timestamps.partition_point(|&t| t < end);
        slices.push(WindowSlice {
            start,
            end,
            tweet_indices: (lo..hi).collect(),
        });
    }
    Ok(slices)
}

/// Index of the last series point of an observation ending at delay
/// `d_minutes` (signed, multiple of the slide interval).
pub fn observation_end_index(config: &WindowingConfig, d_minutes: i64) -> Result<i64> {
    let slide_minutes = config.slide_minutes();
    if slide_minutes <= 0 || d_minutes.rem_euclid(slide_minutes) != 0 {
        return Err(Error::DelayNotAligned {
            minutes: d_minutes,
            slide_minutes,
        });
    }
    Ok(config.points_before_trending as i64 - 1 + d_minutes / slide_minutes)
}

/// Select the length-`l` observation slice ending at delay `d_minutes`
/// relative to the trending point.
pub fn select_observation(
    series: &[f64],
    d_minutes: i64,
    l: usize,
    config: &WindowingConfig,
) -> Result<Vec<f64>> {
    let end = observation_end_index(config, d_minutes)?;
    slice_at(series, end, l)
}

/// Slice `l` points ending at index `end` (inclusive), erroring when the
/// slice leaves the series.
pub fn slice_at(series: &[f64], end: i64, l: usize) -> Result<Vec<f64>> {
    let start = end - l as i64 + 1;
    if start < 0 || end >= series.len() as i64 {
        return Err(Error::ObservationOutOfRange {
            start,
            end,
            len: series.len(),
        });
    }
    Ok(series[start as usize..=end as usize].to_vec())
}
