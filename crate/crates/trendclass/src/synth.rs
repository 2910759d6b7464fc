//! Synthetic corpus generator: labeled trends with tweet streams whose
//! volumes, interaction ratios, and content statistics differ by class, so
//! the full ingest-to-classification workflow can be exercised end to end
//! with a known ground truth.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Lexicons;
use crate::ingest::{Label, TrendRecord, TweetRecord, UserMeta, DEFAULT_HALF_SPAN};
use crate::pipeline::instance_seed;

/// Per-class generation parameters. Ratio parameters are trend-level means;
/// each trend draws its own rate from a clamped Gaussian around the mean and
/// then applies it per tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub trend_count: usize,
    /// Mean tweets per trend (log-normal across trends).
    pub mean_tweets: f64,
    pub tweets_log_std: f64,
    pub retweet_ratio: f64,
    pub retweet_ratio_std: f64,
    pub reply_ratio: f64,
    pub reply_ratio_std: f64,
    pub urls_per_tweet: f64,
    pub urls_std: f64,
    /// Linear time drift of the URL rate: the per-tweet rate is scaled by
    /// `1 - slope * x`, where `x` is the tweet's offset from the trending
    /// point in half-spans. Positive values model link-heavy seeding that
    /// fades over the trend's life; 0 keeps the rate constant.
    pub urls_time_slope: f64,
    pub hashtags_per_tweet: f64,
    pub hashtags_std: f64,
    pub mentions_per_tweet: f64,
    pub mentions_std: f64,
    pub words_per_tweet: f64,
    /// Trend-level spread of the mean words per tweet; keeps content-level
    /// features informative but imperfect.
    pub words_trend_std: f64,
    /// Per-tweet spread of the word count around the trend's mean.
    pub words_std: f64,
    /// Linear time drift of the mean word count, as a fraction of the mean
    /// per half-span (same convention as `urls_time_slope`). Positive values
    /// make tweets start verbose and get terser; negative values reverse it.
    pub words_time_slope: f64,
    /// Fraction of a trend's tweets posted before the trending point.
    pub pre_trend_fraction: f64,
    pub pre_trend_fraction_std: f64,
    /// Time scale (seconds) of the pre-trend build-up: tweet times decay
    /// exponentially backward from the trending point with this scale, so a
    /// small value is a late coordinated surge and a large one a gradual
    /// grass-roots build-up.
    pub pre_trend_scale: f64,
    /// Fraction of pre-trend tweets concentrated in a short promotional
    /// push at a fixed lead time before trending (0 disables the push).
    pub promo_push_fraction: f64,
    /// Lead time (seconds) of the promotional push before trending.
    pub promo_push_lead: f64,
    /// Trend-level Gaussian std (seconds) applied to the push lead, so the
    /// push lands at a slightly different time for each trend.
    pub promo_push_lead_std: f64,
    /// Width (seconds, Gaussian std) of the promotional push.
    pub promo_push_width: f64,
    /// Post-trend volume decay rate: larger values concentrate the burst
    /// right after the trending point.
    pub burst_sharpness: f64,
    /// Probability that a tweet carries one emoticon.
    pub emoticon_rate: f64,
}

/// Full corpus parameterization. Deserialization fills omitted fields from
/// the defaults, so parameter files may be partial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub promoted: ClassParams,
    pub organic: ClassParams,
    pub seed: u64,
    /// Number of distinct accounts shared by all trends.
    pub user_pool: usize,
    /// Number of distinct extra hashtags available for co-occurrence.
    pub hashtag_pool: usize,
    /// Trending time of the first trend, epoch seconds.
    pub start_time: i64,
    /// Tweets are generated within this many seconds of the trending time.
    pub half_span: i64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            promoted: ClassParams {
                trend_count: 40,
                mean_tweets: 240.0,
                tweets_log_std: 0.4,
                retweet_ratio: 0.42,
                retweet_ratio_std: 0.03,
                reply_ratio: 0.075,
                reply_ratio_std: 0.02,
                urls_per_tweet: 0.25,
                urls_std: 0.05,
                urls_time_slope: 2.0,
                hashtags_per_tweet: 1.7,
                hashtags_std: 0.15,
                mentions_per_tweet: 0.8,
                mentions_std: 0.1,
                words_per_tweet: 13.5,
                words_trend_std: 3.0,
                words_std: 1.6,
                words_time_slope: 0.7,
                pre_trend_fraction: 0.15,
                pre_trend_fraction_std: 0.015,
                pre_trend_scale: 43_200.0,
                promo_push_fraction: 0.5,
                promo_push_lead: 28_800.0,
                promo_push_lead_std: 4_800.0,
                promo_push_width: 2_400.0,
                burst_sharpness: 4.5,
                emoticon_rate: 0.10,
            },
            organic: ClassParams {
                trend_count: 90,
                mean_tweets: 370.0,
                tweets_log_std: 0.5,
                retweet_ratio: 0.33,
                retweet_ratio_std: 0.06,
                reply_ratio: 0.20,
                reply_ratio_std: 0.08,
                urls_per_tweet: 0.15,
                urls_std: 0.06,
                urls_time_slope: 0.0,
                hashtags_per_tweet: 1.7,
                hashtags_std: 0.2,
                mentions_per_tweet: 0.9,
                mentions_std: 0.15,
                words_per_tweet: 12.2,
                words_trend_std: 3.0,
                words_std: 1.6,
                words_time_slope: -0.7,
                pre_trend_fraction: 0.13,
                pre_trend_fraction_std: 0.02,
                pre_trend_scale: 43_200.0,
                promo_push_fraction: 0.0,
                promo_push_lead: 28_800.0,
                promo_push_lead_std: 4_800.0,
                promo_push_width: 2_400.0,
                burst_sharpness: 4.5,
                emoticon_rate: 0.10,
            },
            seed: 1,
            user_pool: 600,
            hashtag_pool: 40,
            start_time: 1_600_000_000,
            half_span: DEFAULT_HALF_SPAN,
        }
    }
}

impl SynthParams {
    /// A class-blind variant: both classes draw from the midpoint of the
    /// two parameter sets (trend counts are preserved), so labels carry no
    /// signal and any classifier should sit at chance.
    pub fn class_blind(&self) -> SynthParams {
        fn mid(a: f64, b: f64) -> f64 {
            (a + b) / 2.0
        }
        let p = &self.promoted;
        let o = &self.organic;
        let blended = ClassParams {
            trend_count: 0,
            mean_tweets: mid(p.mean_tweets, o.mean_tweets),
            tweets_log_std: mid(p.tweets_log_std, o.tweets_log_std),
            retweet_ratio: mid(p.retweet_ratio, o.retweet_ratio),
            retweet_ratio_std: mid(p.retweet_ratio_std, o.retweet_ratio_std),
            reply_ratio: mid(p.reply_ratio, o.reply_ratio),
            reply_ratio_std: mid(p.reply_ratio_std, o.reply_ratio_std),
            urls_per_tweet: mid(p.urls_per_tweet, o.urls_per_tweet),
            urls_std: mid(p.urls_std, o.urls_std),
            urls_time_slope: mid(p.urls_time_slope, o.urls_time_slope),
            hashtags_per_tweet: mid(p.hashtags_per_tweet, o.hashtags_per_tweet),
            hashtags_std: mid(p.hashtags_std, o.hashtags_std),
            mentions_per_tweet: mid(p.mentions_per_tweet, o.mentions_per_tweet),
            mentions_std: mid(p.mentions_std, o.mentions_std),
            words_per_tweet: mid(p.words_per_tweet, o.words_per_tweet),
            words_trend_std: mid(p.words_trend_std, o.words_trend_std),
            words_std: mid(p.words_std, o.words_std),
            words_time_slope: mid(p.words_time_slope, o.words_time_slope),
            pre_trend_fraction: mid(p.pre_trend_fraction, o.pre_trend_fraction),
            pre_trend_fraction_std: mid(p.pre_trend_fraction_std, o.pre_trend_fraction_std),
            pre_trend_scale: mid(p.pre_trend_scale, o.pre_trend_scale),
            promo_push_fraction: mid(p.promo_push_fraction, o.promo_push_fraction),
            promo_push_lead: mid(p.promo_push_lead, o.promo_push_lead),
            promo_push_lead_std: mid(p.promo_push_lead_std, o.promo_push_lead_std),
            promo_push_width: mid(p.promo_push_width, o.promo_push_width),
            burst_sharpness: mid(p.burst_sharpness, o.burst_sharpness),
            emoticon_rate: mid(p.emoticon_rate, o.emoticon_rate),
        };
        SynthParams {
            promoted: ClassParams {
                trend_count: self.promoted.trend_count,
                ..blended.clone()
            },
            organic: ClassParams {
                trend_count: self.organic.trend_count,
                ..blended
            },
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, class) in [("promoted", &self.promoted), ("organic", &self.organic)] {
            if class.trend_count == 0 {
                return Err(Error::InvalidParameter(format!(
                    "{name}.trend_count must be positive"
                )));
            }
            if class.mean_tweets.is_nan() || class.mean_tweets < 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name}.mean_tweets must be at least 1"
                )));
            }
        }
        if self.user_pool == 0 || self.start_time <= 0 || self.half_span <= 0 {
            return Err(Error::InvalidParameter(
                "user_pool, start_time and half_span must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Resources shared by every generated trend.
struct SharedPools {
    users: Vec<UserMeta>,
    extra_hashtags: Vec<String>,
    vocabulary: Vec<String>,
    emoticons: Vec<String>,
}

fn build_pools(params: &SynthParams) -> SharedPools {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(params.seed, "pools"));
    let follower_dist = LogNormal::new(300f64.ln(), 1.5).unwrap();
    let status_dist = LogNormal::new(2000f64.ln(), 1.2).unwrap();
    let users = (0..params.user_pool)
        .map(|i| UserMeta {
            user_id: format!("u{i}"),
            followers: follower_dist.sample(&mut rng) as u64,
            followees: follower_dist.sample(&mut rng) as u64,
            favorites: status_dist.sample(&mut rng) as u64 / 4,
            statuses: status_dist.sample(&mut rng) as u64,
            listed: (follower_dist.sample(&mut rng) / 50.0) as u64,
        })
        .collect();
    let extra_hashtags = (0..params.hashtag_pool)
        .map(|i| format!("#topic{i}"))
        .collect();
    // deterministic vocabulary: every word known to the bundled lexicons
    let lexicons = Lexicons::bundled();
    let mut vocabulary: Vec<String> = lexicons.pos.keys().cloned().collect();
    vocabulary.sort();
    let emoticons = [":)", ":(", ":D", ";)", ":-("]
        .iter()
        .map(|s| s.to_string())
        .collect();
    SharedPools {
        users,
        extra_hashtags,
        vocabulary,
        emoticons,
    }
}

fn clamp_ratio(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Generate one trend's record and its time-sorted tweets.
fn generate_trend(
    class: &ClassParams,
    pools: &SharedPools,
    hashtag: &str,
    trending_time: i64,
    label: Label,
    half_span: i64,
    seed: u64,
) -> (TrendRecord, Vec<TweetRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let count_dist = LogNormal::new(
        class.mean_tweets.ln() - class.tweets_log_std * class.tweets_log_std / 2.0,
        class.tweets_log_std,
    )
    .unwrap();
    let n_tweets = (count_dist.sample(&mut rng).round() as usize).max(40);

    // trend-level rates
    let gauss = |rng: &mut ChaCha8Rng, mean: f64, std: f64| {
        if std > 0.0 {
            Normal::new(mean, std).unwrap().sample(rng)
        } else {
            mean
        }
    };
    let retweet_rate = clamp_ratio(gauss(
        &mut rng,
        class.retweet_ratio,
        class.retweet_ratio_std,
    ));
    let reply_rate = clamp_ratio(gauss(&mut rng, class.reply_ratio, class.reply_ratio_std));
    let url_rate = gauss(&mut rng, class.urls_per_tweet, class.urls_std).max(0.0);
    let pre_fraction = gauss(
        &mut rng,
        class.pre_trend_fraction,
        class.pre_trend_fraction_std,
    )
    .clamp(0.02, 0.5);
    let words_mean = gauss(&mut rng, class.words_per_tweet, class.words_trend_std).max(2.0);
    let mention_rate = gauss(&mut rng, class.mentions_per_tweet, class.mentions_std).max(0.01);
    let hashtag_rate = gauss(&mut rng, class.hashtags_per_tweet, class.hashtags_std).max(1.0);
    let push_lead = gauss(&mut rng, class.promo_push_lead, class.promo_push_lead_std).max(0.0);

    let n_pre = ((n_tweets as f64 * pre_fraction).round() as usize).clamp(1, n_tweets - 1);
    let zipf = Zipf::new(pools.vocabulary.len() as u64, 1.05).unwrap();

    let mut tweets = Vec::with_capacity(n_tweets);
    for i in 0..n_tweets {
        // timestamps: linear ramp up to the trending point, then a
        // truncated exponential burst after it
        let timestamp = if i < n_pre {
            let in_push =
                class.promo_push_fraction > 0.0 && rng.gen_bool(class.promo_push_fraction);
            let offset = if in_push {
                push_lead
                    + Normal::new(0.0, class.promo_push_width)
                        .unwrap()
                        .sample(&mut rng)
            } else {
                -class.pre_trend_scale * (1.0 - rng.gen::<f64>()).ln()
            };
            trending_time - (offset.clamp(1.0, half_span as f64 - 1.0)) as i64 - 1
        } else {
            let tau = half_span as f64 / class.burst_sharpness;
            let e: f64 = -tau * (1.0 - rng.gen::<f64>()).ln();
            trending_time + (e.min(half_span as f64 - 1.0)) as i64
        };

        let is_retweet = rng.gen_bool(retweet_rate);
        let is_reply = !is_retweet && rng.gen_bool(reply_rate.min(1.0));
        let sender = pools.users[rng.gen_range(0..pools.users.len())].clone();
        // retweet sources are popularity-skewed so the retweet graph grows
        // hubs the way real cascades do
        let originator = is_retweet.then(|| {
            let idx = (Zipf::new(pools.users.len() as u64, 1.2)
                .unwrap()
                .sample(&mut rng) as usize
                - 1)
            .min(pools.users.len() - 1);
            pools.users[idx].clone()
        });

        let mut hashtag_list = vec![hashtag.to_string()];
        let extra = Poisson::new(hashtag_rate - 1.0 + 1e-9)
            .unwrap()
            .sample(&mut rng) as usize;
        for _ in 0..extra.min(4) {
            hashtag_list
                .push(pools.extra_hashtags[rng.gen_range(0..pools.extra_hashtags.len())].clone());
        }

        let n_mentions = Poisson::new(mention_rate).unwrap().sample(&mut rng) as usize;
        let mut mention_list: Vec<String> = (0..n_mentions.min(5))
            .map(|_| {
                pools.users[rng.gen_range(0..pools.users.len())]
                    .user_id
                    .clone()
            })
            .collect();
        if is_reply && mention_list.is_empty() {
            mention_list.push(
                pools.users[rng.gen_range(0..pools.users.len())]
                    .user_id
                    .clone(),
            );
        }

        let url_drift = (1.0
            - class.urls_time_slope * (timestamp - trending_time) as f64 / half_span as f64)
            .max(0.05);
        let url_count = Poisson::new((url_rate * url_drift).max(1e-9))
            .unwrap()
            .sample(&mut rng) as u64;

        let time_frac = (timestamp - trending_time) as f64 / half_span as f64;
        let words_mean_t = (words_mean * (1.0 - class.words_time_slope * time_frac)).max(2.0);
        let n_words = (Normal::new(words_mean_t, class.words_std)
            .unwrap()
            .sample(&mut rng)
            .round() as i64)
            .max(1) as usize;
        let tokens: Vec<String> = (0..n_words)
            .map(|_| {
                let idx = (zipf.sample(&mut rng) as usize - 1).min(pools.vocabulary.len() - 1);
                pools.vocabulary[idx].clone()
            })
            .collect();
        let emoticon_tokens = if rng.gen_bool(class.emoticon_rate) {
            vec![pools.emoticons[rng.gen_range(0..pools.emoticons.len())].clone()]
        } else {
            Vec::new()
        };

        tweets.push(TweetRecord {
            id: format!("{}-{i}", hashtag.trim_start_matches('#')),
            timestamp,
            hashtag_list,
            mention_list,
            url_count,
            tokens,
            emoticon_tokens,
            is_retweet,
            sender,
            originator,
            is_reply,
            text: None,
        });
    }
    tweets.sort_by_key(|t| (t.timestamp, t.id.clone()));
    (
        TrendRecord {
            hashtag: hashtag.to_string(),
            trending_time,
            label,
        },
        tweets,
    )
}

/// Generate the full corpus in memory: `(trend, tweets)` pairs, promoted
/// and organic interleaved in a seeded random order.
pub fn generate_corpus(params: &SynthParams) -> Result<Vec<(TrendRecord, Vec<TweetRecord>)>> {
    params.validate()?;
    let pools = build_pools(params);
    let mut plan: Vec<Label> = std::iter::repeat_n(Label::Promoted, params.promoted.trend_count)
        .chain(std::iter::repeat_n(
            Label::Organic,
            params.organic.trend_count,
        ))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(params.seed, "plan"));
    plan.shuffle(&mut rng);

    Ok(plan
        .iter()
        .enumerate()
        .map(|(index, &label)| {
            let class = match label {
                Label::Promoted => &params.promoted,
                Label::Organic => &params.organic,
            };
            let hashtag = format!("#trend{index}");
            let trending_time = params.start_time + index as i64 * 86_400;
            generate_trend(
                class,
                &pools,
                &hashtag,
                trending_time,
                label,
                params.half_span,
                instance_seed(params.seed, &format!("trend-{index}")),
            )
        })
        .collect())
}

/// Write a corpus to disk: `manifest.jsonl` plus one `tweets/<name>.jsonl`
/// per trend, both line-delimited JSON.
pub fn write_corpus(dir: &Path, params: &SynthParams) -> Result<Vec<TrendRecord>> {
    let corpus = generate_corpus(params)?;
    let io_err = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir.join("tweets")).map_err(io_err)?;
    let manifest_path = dir.join("manifest.jsonl");
    let mut manifest = BufWriter::new(File::create(&manifest_path).map_err(io_err)?);
    let mut records = Vec::with_capacity(corpus.len());
    for (trend, tweets) in &corpus {
        serde_json::to_writer(&mut manifest, trend)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        manifest.write_all(b"\n").map_err(io_err)?;
        let name = trend.hashtag.trim_start_matches('#');
        let tweet_path = dir.join("tweets").join(format!("{name}.jsonl"));
        let mut out = BufWriter::new(File::create(&tweet_path).map_err(io_err)?);
        for tweet in tweets {
            serde_json::to_writer(&mut out, tweet)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            out.write_all(b"\n").map_err(io_err)?;
        }
        records.push(trend.clone());
    }
    Ok(records)
}

/// Path of one trend's tweet file under a corpus directory.
pub fn tweet_file(dir: &Path, hashtag: &str) -> std::path::PathBuf {
    dir.join("tweets")
        .join(format!("{}.jsonl", hashtag.trim_start_matches('#')))
}
