//! The 487-feature extraction layer: five feature families computed on each
//! sliding window of a trend's tweets, producing one column of the trend's
//! feature matrix.
//!
//! Family sizes: network 101 (39 retweet + 39 mention + 23 co-occurrence),
//! user 80, timing 25, content 168, sentiment 113. Every feature is finite
//! for every input; degenerate cases (empty windows, empty streams) produce
//! zeros so matrices stay dense and time-aligned.

pub mod graph;
pub mod lexicons;

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{Label, TweetRecord, WindowSlice};
use crate::stats::{categorical_entropy, summarize8, DistributionSummary, SUMMARY_SUFFIXES};

pub use graph::{build_network, network_metrics, NetworkKind, NetworkMetrics, WeightedGraph};
pub use lexicons::{
    parse_emoticon_lexicon, parse_polarity_lexicon, parse_pos_lexicon, parse_score_lexicon,
    parse_vad_lexicon, Lexicons, Polarity, PosTag, POS_TAGS,
};

/// Total number of features in the registry.
pub const FEATURE_COUNT: usize = 487;

/// The fixed, ordered list of feature identifiers. Identical for every
/// window and every trend.
pub fn feature_registry() -> &'static [String] {
    static REGISTRY: OnceLock<Vec<String>> = OnceLock::new();
    REGISTRY.get_or_init(build_registry)
}

/// Index of a feature identifier within the registry.
pub fn feature_index(id: &str) -> Option<usize> {
    static INDEX: OnceLock<std::collections::HashMap<&'static str, usize>> = OnceLock::new();
    INDEX
        .get_or_init(|| {
            feature_registry()
                .iter()
                .enumerate()
                .map(|(i, s)| (s.as_str(), i))
                .collect()
        })
        .get(id)
        .copied()
}

fn push_summary(ids: &mut Vec<String>, prefix: &str) {
    for suffix in SUMMARY_SUFFIXES {
        ids.push(format!("{prefix}.{suffix}"));
    }
}

fn build_registry() -> Vec<String> {
    let mut ids = Vec::with_capacity(FEATURE_COUNT);

    // Network family: retweet and mention graphs are directed (39 features
    // each); the co-occurrence graph is undirected and omits the in-/out-
    // strength blocks (23 features).
    for kind in [
        NetworkKind::Retweet,
        NetworkKind::Mention,
        NetworkKind::HashtagCooccurrence,
    ] {
        let g = kind.name();
        ids.push(format!("network.{g}.node_count"));
        ids.push(format!("network.{g}.edge_count"));
        push_summary(&mut ids, &format!("network.{g}.strength"));
        if kind.directed() {
            push_summary(&mut ids, &format!("network.{g}.in_strength"));
            push_summary(&mut ids, &format!("network.{g}.out_strength"));
        }
        push_summary(&mut ids, &format!("network.{g}.component_size"));
        ids.push(format!("network.{g}.density.whole"));
        ids.push(format!("network.{g}.density.lcc"));
        ids.push(format!("network.{g}.assortativity.whole"));
        ids.push(format!("network.{g}.assortativity.lcc"));
        ids.push(format!("network.{g}.lcc_mean_shortest_path"));
    }

    // User family: 8 statistics over 10 per-tweet quantities.
    for role in ["sender", "originator"] {
        for field in ["followers", "followees", "favorites", "statuses", "listed"] {
            push_summary(&mut ids, &format!("user.{role}.{field}"));
        }
    }

    // Timing family.
    ids.push("timing.count".into());
    push_summary(&mut ids, "timing.gap_all");
    push_summary(&mut ids, "timing.gap_retweet");
    push_summary(&mut ids, "timing.gap_mention");

    // Content family.
    push_summary(&mut ids, "content.hashtag_count");
    push_summary(&mut ids, "content.mention_count");
    push_summary(&mut ids, "content.url_count");
    for tag in POS_TAGS {
        push_summary(&mut ids, &format!("content.pos.{}.frequency", tag.name()));
    }
    for tag in POS_TAGS {
        push_summary(&mut ids, &format!("content.pos.{}.proportion", tag.name()));
    }
    push_summary(&mut ids, "content.word_count");
    push_summary(&mut ids, "content.word_entropy");

    // Sentiment family.
    for lexicon in ["happiness", "valence", "arousal", "dominance"] {
        ids.push(format!("sentiment.aggregated.{lexicon}.mean"));
        ids.push(format!("sentiment.aggregated.{lexicon}.std"));
    }
    for quantity in [
        "happiness",
        "valence",
        "arousal",
        "dominance",
        "polarization",
        "polarization_entropy",
        "pos_emoticon_entropy",
        "neg_emoticon_entropy",
        "emoticon_entropy",
        "pos_neg_ratio",
        "pos_emoticon_count",
        "neg_emoticon_count",
        "emoticon_count",
    ] {
        push_summary(&mut ids, &format!("sentiment.{quantity}"));
    }
    ids.push("sentiment.emoticon_tweet_ratio".into());

    debug_assert_eq!(ids.len(), FEATURE_COUNT);
    ids
}

fn extend_summary(out: &mut Vec<f64>, summary: &DistributionSummary) {
    out.extend_from_slice(&summary.as_array());
}

fn metrics_values(out: &mut Vec<f64>, m: &NetworkMetrics) {
    out.push(m.node_count);
    out.push(m.edge_count);
    extend_summary(out, &m.strength);
    if let Some(s) = &m.in_strength {
        extend_summary(out, s);
    }
    if let Some(s) = &m.out_strength {
        extend_summary(out, s);
    }
    extend_summary(out, &m.component_sizes);
    out.push(m.density_whole);
    out.push(m.density_lcc);
    out.push(m.assortativity_whole);
    out.push(m.assortativity_lcc);
    out.push(m.lcc_mean_shortest_path);
}

/// Network features of one window: 39 + 39 + 23 = 101 values.
pub fn network_features(tweets: &[&TweetRecord]) -> Vec<f64> {
    let mut out = Vec::with_capacity(101);
    for kind in [
        NetworkKind::Retweet,
        NetworkKind::Mention,
        NetworkKind::HashtagCooccurrence,
    ] {
        let graph = build_network(tweets.iter().copied(), kind);
        metrics_values(&mut out, &network_metrics(&graph));
    }
    out
}

/// User meta-data features: 8 statistics over 10 per-tweet quantities
/// (sender fields over all tweets, originator fields over retweets only).
pub fn user_features(tweets: &[&TweetRecord]) -> Vec<f64> {
    let mut out = Vec::with_capacity(80);
    let sender_fields: [fn(&crate::ingest::UserMeta) -> u64; 5] = [
        |u| u.followers,
        |u| u.followees,
        |u| u.favorites,
        |u| u.statuses,
        |u| u.listed,
    ];
    for field in sender_fields {
        let values: Vec<f64> = tweets.iter().map(|t| field(&t.sender) as f64).collect();
        extend_summary(&mut out, &summarize8(&values));
    }
    for field in sender_fields {
        let values: Vec<f64> = tweets
            .iter()
            .filter_map(|t| t.originator.as_ref())
            .map(|u| field(u) as f64)
            .collect();
        extend_summary(&mut out, &summarize8(&values));
    }
    out
}

fn gaps(timestamps: &[i64]) -> Vec<f64> {
    timestamps
        .windows(2)
        .map(|w| (w[1] - w[0]) as f64)
        .collect()
}

/// Timing features: tweet count plus gap distributions for three event
/// streams (all tweets, retweets, tweets with mentions). Sorts by timestamp
/// internally, so the result is invariant under input reordering.
pub fn timing_features(tweets: &[&TweetRecord]) -> Vec<f64> {
    let mut out = Vec::with_capacity(25);
    out.push(tweets.len() as f64);
    let mut all: Vec<i64> = tweets.iter().map(|t| t.timestamp).collect();
    all.sort_unstable();
    let mut retweets: Vec<i64> = tweets
        .iter()
        .filter(|t| t.is_retweet)
        .map(|t| t.timestamp)
        .collect();
    retweets.sort_unstable();
    let mut mentions: Vec<i64> = tweets
        .iter()
        .filter(|t| !t.mention_list.is_empty())
        .map(|t| t.timestamp)
        .collect();
    mentions.sort_unstable();
    for stream in [&all, &retweets, &mentions] {
        extend_summary(&mut out, &summarize8(&gaps(stream)));
    }
    out
}

fn word_entropy(tokens: &[String]) -> f64 {
    let mut counts: std::collections::HashMap<&str, u64> = std::collections::HashMap::new();
    for token in tokens {
        *counts.entry(token.as_str()).or_insert(0) += 1;
    }
    let counts: Vec<u64> = counts.values().copied().collect();
    categorical_entropy(&counts)
}

/// Content and language features: entity counts, POS tag frequencies and
/// proportions, word counts and word entropy. 168 values.
pub fn content_features(tweets: &[&TweetRecord], lexicons: &Lexicons) -> Vec<f64> {
    let mut out = Vec::with_capacity(168);
    let n = tweets.len();

    let hashtag_counts: Vec<f64> = tweets.iter().map(|t| t.hashtag_list.len() as f64).collect();
    let mention_counts: Vec<f64> = tweets.iter().map(|t| t.mention_list.len() as f64).collect();
    let url_counts: Vec<f64> = tweets.iter().map(|t| t.url_count as f64).collect();
    extend_summary(&mut out, &summarize8(&hashtag_counts));
    extend_summary(&mut out, &summarize8(&mention_counts));
    extend_summary(&mut out, &summarize8(&url_counts));

    // Per-tweet POS tag counts and proportions. Untagged tokens are excluded
    // from the proportion denominator; a zero denominator yields 0.
    let mut frequencies: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(n)).collect();
    let mut proportions: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(n)).collect();
    for tweet in tweets {
        let mut counts = [0u64; 8];
        for token in &tweet.tokens {
            if let Some(tag) = lexicons.pos_tag(token) {
                counts[tag as usize] += 1;
            }
        }
        let tagged: u64 = counts.iter().sum();
        for (i, &c) in counts.iter().enumerate() {
            frequencies[i].push(c as f64);
            proportions[i].push(if tagged > 0 {
                c as f64 / tagged as f64
            } else {
                0.0
            });
        }
    }
    for values in &frequencies {
        extend_summary(&mut out, &summarize8(values));
    }
    for values in &proportions {
        extend_summary(&mut out, &summarize8(values));
    }

    let word_counts: Vec<f64> = tweets.iter().map(|t| t.tokens.len() as f64).collect();
    let entropies: Vec<f64> = tweets.iter().map(|t| word_entropy(&t.tokens)).collect();
    extend_summary(&mut out, &summarize8(&word_counts));
    extend_summary(&mut out, &summarize8(&entropies));
    out
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn token_counts_entropy(tokens: &[&str]) -> f64 {
    let mut counts: std::collections::HashMap<&str, u64> = std::collections::HashMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    let counts: Vec<u64> = counts.values().copied().collect();
    categorical_entropy(&counts)
}

/// Sentiment features from the lexicon bundle. 113 values.
pub fn sentiment_features(tweets: &[&TweetRecord], lexicons: &Lexicons) -> Vec<f64> {
    let mut out = Vec::with_capacity(113);
    let n = tweets.len();

    // Aggregated token scores over the whole window.
    let score_maps = [
        &lexicons.happiness,
        &lexicons.valence,
        &lexicons.arousal,
        &lexicons.dominance,
    ];
    for map in score_maps {
        let scores: Vec<f64> = tweets
            .iter()
            .flat_map(|t| t.tokens.iter())
            .filter_map(|token| map.get(token.as_str()).copied())
            .collect();
        let (mean, std) = mean_std(&scores);
        out.push(mean);
        out.push(std);
    }

    // Thirteen per-tweet quantities, summarized with the 8 statistics each.
    let mut per_tweet: Vec<Vec<f64>> = (0..13).map(|_| Vec::with_capacity(n)).collect();
    let mut tweets_with_emoticons = 0usize;
    for tweet in tweets {
        for (slot, map) in score_maps.iter().enumerate() {
            let scores: Vec<f64> = tweet
                .tokens
                .iter()
                .filter_map(|token| map.get(token.as_str()).copied())
                .collect();
            per_tweet[slot].push(if scores.is_empty() {
                0.0
            } else {
                scores.iter().sum::<f64>() / scores.len() as f64
            });
        }

        let (mut pos_strength, mut neg_strength) = (0.0f64, 0.0f64);
        let (mut pos_words, mut neg_words) = (0u64, 0u64);
        for token in &tweet.tokens {
            if let Some(&(polarity, strength)) = lexicons.polarity.get(token.as_str()) {
                match polarity {
                    Polarity::Positive => {
                        pos_strength += strength;
                        pos_words += 1;
                    }
                    Polarity::Negative => {
                        neg_strength += strength;
                        neg_words += 1;
                    }
                }
            }
        }
        per_tweet[4].push(pos_strength - neg_strength);
        per_tweet[5].push(categorical_entropy(&[pos_words, neg_words]));

        let mut pos_emoticons: Vec<&str> = Vec::new();
        let mut neg_emoticons: Vec<&str> = Vec::new();
        let mut all_emoticons: Vec<&str> = Vec::new();
        for emo in &tweet.emoticon_tokens {
            all_emoticons.push(emo.as_str());
            match lexicons.emoticons.get(emo.as_str()) {
                Some(Polarity::Positive) => pos_emoticons.push(emo.as_str()),
                Some(Polarity::Negative) => neg_emoticons.push(emo.as_str()),
                None => {}
            }
        }
        per_tweet[6].push(token_counts_entropy(&pos_emoticons));
        per_tweet[7].push(token_counts_entropy(&neg_emoticons));
        per_tweet[8].push(token_counts_entropy(&all_emoticons));
        per_tweet[9].push(if neg_strength > 0.0 {
            pos_strength / neg_strength
        } else {
            pos_strength
        });
        per_tweet[10].push(pos_emoticons.len() as f64);
        per_tweet[11].push(neg_emoticons.len() as f64);
        per_tweet[12].push(all_emoticons.len() as f64);
        if !tweet.emoticon_tokens.is_empty() {
            tweets_with_emoticons += 1;
        }
    }
    for values in &per_tweet {
        extend_summary(&mut out, &summarize8(values));
    }
    out.push(if n > 0 {
        tweets_with_emoticons as f64 / n as f64
    } else {
        0.0
    });
    out
}

/// All 487 features of one window, in registry order.
pub fn window_features(tweets: &[&TweetRecord], lexicons: &Lexicons) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURE_COUNT);
    out.extend(network_features(tweets));
    out.extend(user_features(tweets));
    out.extend(timing_features(tweets));
    out.extend(content_features(tweets, lexicons));
    out.extend(sentiment_features(tweets, lexicons));
    debug_assert_eq!(out.len(), FEATURE_COUNT);
    out
}

/// A trend's 487 x W feature matrix, stored row-major (one row per feature,
/// one column per window).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub n_windows: usize,
    pub values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn row(&self, feature: usize) -> &[f64] {
        &self.values[feature * self.n_windows..(feature + 1) * self.n_windows]
    }

    pub fn get(&self, feature: usize, window: usize) -> f64 {
        self.values[feature * self.n_windows + window]
    }
}

/// Compute the full feature matrix of one trend: column `j` holds the 487
/// features of window `j`. Windows are processed in parallel; assembly is
/// deterministic.
pub fn extract_matrix(
    tweets: &[TweetRecord],
    windows: &[WindowSlice],
    lexicons: &Lexicons,
) -> FeatureMatrix {
    let n_windows = windows.len();
    let columns: Vec<Vec<f64>> = windows
        .par_iter()
        .map(|slice| {
            let selected: Vec<&TweetRecord> =
                slice.tweet_indices.iter().map(|&i| &tweets[i]).collect();
            window_features(&selected, lexicons)
        })
        .collect();
    let mut values = vec![0.0; FEATURE_COUNT * n_windows];
    for (j, column) in columns.iter().enumerate() {
        for (i, &v) in column.iter().enumerate() {
            values[i * n_windows + j] = v;
        }
    }
    FeatureMatrix { n_windows, values }
}

/// Serialized per-trend feature document: one JSON object per trend with the
/// hashtag, label, row-identifier list, and row-major value array.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendFeaturesDoc {
    pub hashtag: String,
    pub label: Label,
    pub rows: Vec<String>,
    pub n_windows: usize,
    pub values: Vec<f64>,
}

impl TrendFeaturesDoc {
    pub fn new(hashtag: String, label: Label, matrix: FeatureMatrix) -> Self {
        TrendFeaturesDoc {
            hashtag,
            label,
            rows: feature_registry().to_vec(),
            n_windows: matrix.n_windows,
            values: matrix.values,
        }
    }

    pub fn matrix(&self) -> FeatureMatrix {
        FeatureMatrix {
            n_windows: self.n_windows,
            values: self.values.clone(),
        }
    }

    /// Validate the row list and value count against the registry.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.rows.len() != FEATURE_COUNT {
            return Err(format!(
                "expected {FEATURE_COUNT} rows, got {}",
                self.rows.len()
            ));
        }
        if self.rows != feature_registry() {
            return Err("row identifiers do not match the feature registry".into());
        }
        if self.values.len() != FEATURE_COUNT * self.n_windows {
            return Err(format!(
                "expected {} values, got {}",
                FEATURE_COUNT * self.n_windows,
                self.values.len()
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err("non-finite feature value".into());
        }
        Ok(())
    }
}

/// Extract feature documents for a whole in-memory corpus of labeled trends
/// with their tweets.
pub fn extract_docs(
    corpus: &[(crate::ingest::TrendRecord, Vec<TweetRecord>)],
    windowing: &crate::ingest::WindowingConfig,
    lexicons: &Lexicons,
) -> crate::error::Result<Vec<TrendFeaturesDoc>> {
    corpus
        .iter()
        .map(|(trend, tweets)| {
            let windows = crate::ingest::window_slices(tweets, windowing, trend.trending_time)?;
            let matrix = extract_matrix(tweets, &windows, lexicons);
            Ok(TrendFeaturesDoc::new(
                trend.hashtag.clone(),
                trend.label,
                matrix,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{UserMeta, WindowingConfig};
    use approx::assert_abs_diff_eq;

    fn lex() -> Lexicons {
        Lexicons::bundled()
    }

    fn basic_tweet(ts: i64) -> TweetRecord {
        TweetRecord {
            id: format!("t{ts}"),
            timestamp: ts,
            hashtag_list: vec!["t".into()],
            mention_list: vec![],
            url_count: 0,
            tokens: vec![],
            emoticon_tokens: vec![],
            is_retweet: false,
            sender: UserMeta::default(),
            originator: None,
            is_reply: false,
            text: None,
        }
    }

    #[test]
    fn registry_has_487_features_with_expected_family_sizes() {
        let registry = feature_registry();
        assert_eq!(registry.len(), FEATURE_COUNT);
        let count = |prefix: &str| registry.iter().filter(|id| id.starts_with(prefix)).count();
        assert_eq!(count("network."), 101);
        assert_eq!(count("user."), 80);
        assert_eq!(count("timing."), 25);
        assert_eq!(count("content."), 168);
        assert_eq!(count("sentiment."), 113);
        // identifiers are unique
        let mut sorted: Vec<_> = registry.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), FEATURE_COUNT);
    }

    #[test]
    fn empty_window_is_all_zeros() {
        let values = window_features(&[], &lex());
        assert_eq!(values.len(), FEATURE_COUNT);
        assert!(values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_features_finite_on_varied_input() {
        let mut tweets = Vec::new();
        for i in 0..20 {
            let mut t = basic_tweet(1000 + i * 37);
            t.tokens = vec!["love".into(), "time".into(), "run".into(), "zzzz".into()];
            t.emoticon_tokens = if i % 3 == 0 {
                vec![":)".into()]
            } else {
                vec![]
            };
            t.url_count = (i % 2) as u64;
            t.hashtag_list = vec!["t".into(), format!("x{}", i % 4)];
            t.mention_list = if i % 2 == 0 {
                vec![format!("u{}", i % 5)]
            } else {
                vec![]
            };
            t.sender.user_id = format!("s{}", i % 7);
            t.sender.followers = (i * i) as u64;
            if i % 4 == 0 {
                t.is_retweet = true;
                t.originator = Some(UserMeta {
                    user_id: format!("o{}", i % 3),
                    followers: 10 + i as u64,
                    ..UserMeta::default()
                });
            }
            tweets.push(t);
        }
        let refs: Vec<&TweetRecord> = tweets.iter().collect();
        let values = window_features(&refs, &lex());
        assert_eq!(values.len(), FEATURE_COUNT);
        assert!(values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn timing_gap_example() {
        let tweets: Vec<TweetRecord> = [100, 160, 280].iter().map(|&t| basic_tweet(t)).collect();
        let refs: Vec<&TweetRecord> = tweets.iter().collect();
        let values = timing_features(&refs);
        assert_eq!(values[0], 3.0); // count
                                    // gap_all mean is values[1..9][3] = index 4 within the block
        let registry_gap_mean = 1 + 3; // count + offset of "mean" within summary
        assert_abs_diff_eq!(values[registry_gap_mean], 90.0);
    }

    #[test]
    fn timing_invariant_under_reordering() {
        let mut tweets: Vec<TweetRecord> =
            [280, 100, 160].iter().map(|&t| basic_tweet(t)).collect();
        let refs: Vec<&TweetRecord> = tweets.iter().collect();
        let a = timing_features(&refs);
        tweets.sort_by_key(|t| t.timestamp);
        let refs: Vec<&TweetRecord> = tweets.iter().collect();
        let b = timing_features(&refs);
        assert_eq!(a, b);
    }

    #[test]
    fn user_features_constant_sender() {
        let mut tweets = Vec::new();
        for i in 0..5 {
            let mut t = basic_tweet(100 + i);
            t.sender.followers = 100;
            tweets.push(t);
        }
        let refs: Vec<&TweetRecord> = tweets.iter().collect();
        let values = user_features(&refs);
        // sender.followers block is the first summary
        assert_eq!(values[0], 100.0); // min
        assert_eq!(values[1], 100.0); // max
        assert_eq!(values[3], 100.0); // mean
        assert_eq!(values[4], 0.0); // std
                                    // originator blocks all zero (no retweets)
        assert!(values[40..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn content_word_entropy_uniform() {
        let mut t = basic_tweet(10);
        t.tokens = vec!["a".into(), "b".into(), "c".into()];
        let binding = [t];
        let refs: Vec<&TweetRecord> = binding.iter().collect();
        let values = content_features(&refs, &lex());
        // word_entropy block is the last 8 values; single tweet -> min=max=mean
        let entropy_mean = values[values.len() - 8 + 3];
        assert_abs_diff_eq!(entropy_mean, 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn pos_frequency_and_proportion() {
        let mut t = basic_tweet(10);
        // "run" is a verb, "fast" is untagged in the bundled lexicon; use
        // known words: "run" verb, "quickly" adverb.
        t.tokens = vec!["run".into(), "run".into(), "quickly".into()];
        let binding = [t];
        let refs: Vec<&TweetRecord> = binding.iter().collect();
        let values = content_features(&refs, &lex());
        let registry = feature_registry();
        let base = feature_index("content.hashtag_count.min").unwrap();
        let idx = |id: &str| feature_index(id).unwrap() - base;
        assert_eq!(values[idx("content.pos.verb.frequency.mean")], 2.0);
        assert_abs_diff_eq!(
            values[idx("content.pos.verb.proportion.mean")],
            2.0 / 3.0,
            epsilon = 1e-12
        );
        assert_eq!(values[idx("content.pos.adverb.frequency.mean")], 1.0);
        assert_eq!(registry.len(), FEATURE_COUNT);
    }

    #[test]
    fn sentiment_happiness_mean_of_two_tokens() {
        let lexicons = lex();
        // find two words with known happiness scores
        let mut iter = lexicons.happiness.iter();
        let (w1, s1) = iter.next().unwrap();
        let (w2, s2) = iter.next().unwrap();
        let mut t = basic_tweet(10);
        t.tokens = vec![w1.clone(), w2.clone()];
        let binding = [t];
        let refs: Vec<&TweetRecord> = binding.iter().collect();
        let values = sentiment_features(&refs, &lexicons);
        let base = feature_index("sentiment.aggregated.happiness.mean").unwrap();
        let idx = |id: &str| feature_index(id).unwrap() - base;
        let expected = (s1 + s2) / 2.0;
        assert_abs_diff_eq!(
            values[idx("sentiment.happiness.mean")],
            expected,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            values[idx("sentiment.aggregated.happiness.mean")],
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn emoticon_ratio_one_when_every_tweet_has_emoticon() {
        let mut tweets = Vec::new();
        for i in 0..4 {
            let mut t = basic_tweet(10 + i);
            t.emoticon_tokens = vec![":)".into()];
            tweets.push(t);
        }
        let refs: Vec<&TweetRecord> = tweets.iter().collect();
        let values = sentiment_features(&refs, &lex());
        assert_eq!(*values.last().unwrap(), 1.0);
    }

    #[test]
    fn extract_matrix_empty_trend_is_zero() {
        let cfg = WindowingConfig::default();
        let windows = crate::ingest::window_slices(&[], &cfg, 1_000_000).unwrap();
        let matrix = extract_matrix(&[], &windows, &lex());
        assert_eq!(matrix.n_windows, 120);
        assert_eq!(matrix.values.len(), FEATURE_COUNT * 120);
        assert!(matrix.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_windows_produce_identical_columns() {
        let cfg = WindowingConfig {
            window_length: 100,
            slide: 100,
            series_length: 4,
            points_before_trending: 2,
        };
        // two tweets placed so that two consecutive windows hold one each
        let tweets = vec![basic_tweet(901), basic_tweet(1001)];
        let windows = crate::ingest::window_slices(&tweets, &cfg, 1000).unwrap();
        let matrix = extract_matrix(&tweets, &windows, &lex());
        for f in 0..FEATURE_COUNT {
            assert_eq!(matrix.get(f, 1), matrix.get(f, 2));
        }
    }
}
