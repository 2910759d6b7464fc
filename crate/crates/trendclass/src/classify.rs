//! The three classifiers: KNN-DTW scoring, SAX-VSM word-bag classification,
//! and flat KNN on concatenated raw vectors.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dtw::dtw_distance;
use crate::encoding::{paa, sax_word, SaxWord};
use crate::error::{Error, Result};
use crate::ingest::Label;

/// Default neighborhood size for both KNN classifiers.
pub const DEFAULT_K: usize = 5;
/// Default PAA segment width for KNN-DTW.
pub const DEFAULT_COARSEN_WIDTH: usize = 5;
/// Default SAX word length.
pub const DEFAULT_WORD_LENGTH: usize = 4;
/// Default SAX alphabet size.
pub const DEFAULT_ALPHABET_SIZE: usize = 5;

/// One trend's per-feature observation series, aligned to a feature list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub hashtag: String,
    pub label: Label,
    /// One series per feature, all the same length.
    pub series: Vec<Vec<f64>>,
}

/// Fraction of promoted trends among the `k` nearest neighbors; distance
/// ties break by training-set index order.
fn knn_promoted_fraction(distances: &[f64], labels: &[Label], k: usize) -> f64 {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| {
        distances[a]
            .partial_cmp(&distances[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let k = k.min(order.len());
    let promoted = order[..k]
        .iter()
        .filter(|&&i| labels[i].is_promoted())
        .count();
    promoted as f64 / k as f64
}

/// KNN-DTW model: per-feature coarsened training series sharing one label
/// sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedKnnDtw {
    pub features: Vec<String>,
    pub k: usize,
    pub coarsen_width: usize,
    pub labels: Vec<Label>,
    /// Indexed `[feature][trend]`, PAA-coarsened.
    pub series: Vec<Vec<Vec<f64>>>,
}

impl TrainedKnnDtw {
    /// Train on labeled trends; the order of `features` must match each
    /// trend's series order.
    pub fn train(
        features: &[String],
        trends: &[LabeledSeries],
        k: usize,
        coarsen_width: usize,
    ) -> Result<Self> {
        if trends.is_empty() {
            return Err(Error::EmptyInput("knn-dtw training set"));
        }
        if k == 0 || k > trends.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} invalid for training set of {}",
                trends.len()
            )));
        }
        let labels: Vec<Label> = trends.iter().map(|t| t.label).collect();
        let mut series = Vec::with_capacity(features.len());
        for f in 0..features.len() {
            let mut per_feature = Vec::with_capacity(trends.len());
            for trend in trends {
                per_feature.push(paa(&trend.series[f], coarsen_width)?.values);
            }
            series.push(per_feature);
        }
        Ok(TrainedKnnDtw {
            features: features.to_vec(),
            k,
            coarsen_width,
            labels,
            series,
        })
    }

    /// Score a query whose series are already aligned to `self.features`.
    /// Per feature: fraction of promoted among the K DTW-nearest training
    /// trends; the class score is the mean across features.
    pub fn score_aligned(&self, query: &[Vec<f64>]) -> Result<f64> {
        if query.len() != self.features.len() {
            return Err(Error::LengthMismatch {
                expected: self.features.len(),
                got: query.len(),
            });
        }
        let mut total = 0.0;
        for (f, series) in query.iter().enumerate() {
            let coarse = paa(series, self.coarsen_width)?.values;
            let distances: Vec<f64> = self.series[f]
                .iter()
                .map(|train| dtw_distance(&coarse, train))
                .collect::<Result<_>>()?;
            total += knn_promoted_fraction(&distances, &self.labels, self.k);
        }
        Ok(total / self.features.len() as f64)
    }

    /// Score a query given as a feature -> series mapping.
    pub fn score(&self, query: &BTreeMap<String, Vec<f64>>) -> Result<f64> {
        let aligned = align(&self.features, query)?;
        self.score_aligned(&aligned)
    }
}

fn align(features: &[String], query: &BTreeMap<String, Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    features
        .iter()
        .map(|f| {
            query
                .get(f)
                .cloned()
                .ok_or_else(|| Error::MissingFeature(f.clone()))
        })
        .collect()
}

/// SAX-VSM model: per feature, one set of words per class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordBags {
    pub features: Vec<String>,
    pub word_length: usize,
    pub alphabet_size: usize,
    pub promoted: Vec<BTreeSet<SaxWord>>,
    pub organic: Vec<BTreeSet<SaxWord>>,
}

impl WordBags {
    /// Build the two word sets per feature from labeled trends. Requires at
    /// least one trend per class.
    pub fn train(
        features: &[String],
        trends: &[LabeledSeries],
        word_length: usize,
        alphabet_size: usize,
    ) -> Result<Self> {
        let has_promoted = trends.iter().any(|t| t.label.is_promoted());
        let has_organic = trends.iter().any(|t| !t.label.is_promoted());
        if !has_promoted || !has_organic {
            return Err(Error::SingleClass);
        }
        let mut promoted = vec![BTreeSet::new(); features.len()];
        let mut organic = vec![BTreeSet::new(); features.len()];
        for trend in trends {
            for (f, series) in trend.series.iter().enumerate() {
                let word = sax_word(series, word_length, alphabet_size)?;
                if trend.label.is_promoted() {
                    promoted[f].insert(word);
                } else {
                    organic[f].insert(word);
                }
            }
        }
        Ok(WordBags {
            features: features.to_vec(),
            word_length,
            alphabet_size,
            promoted,
            organic,
        })
    }

    /// Per-feature word matches for an aligned query: for each feature the
    /// query word scores one vote for each class whose bag contains it.
    pub fn match_votes(&self, query: &[Vec<f64>]) -> Result<(usize, usize)> {
        if query.len() != self.features.len() {
            return Err(Error::LengthMismatch {
                expected: self.features.len(),
                got: query.len(),
            });
        }
        let mut promoted_votes = 0usize;
        let mut organic_votes = 0usize;
        for (f, series) in query.iter().enumerate() {
            let word = sax_word(series, self.word_length, self.alphabet_size)?;
            if self.promoted[f].contains(&word) {
                promoted_votes += 1;
            }
            if self.organic[f].contains(&word) {
                organic_votes += 1;
            }
        }
        Ok((promoted_votes, organic_votes))
    }

    /// Assign the class with the majority of word matches across features;
    /// a tie draws a uniform random class from the seeded generator.
    pub fn classify_aligned(&self, query: &[Vec<f64>], rng_seed: u64) -> Result<Label> {
        let (promoted_votes, organic_votes) = self.match_votes(query)?;
        Ok(resolve_votes(promoted_votes, organic_votes, rng_seed))
    }

    pub fn classify(&self, query: &BTreeMap<String, Vec<f64>>, rng_seed: u64) -> Result<Label> {
        let aligned = align(&self.features, query)?;
        self.classify_aligned(&aligned, rng_seed)
    }
}

/// Majority vote with seeded uniform tie-break.
pub fn resolve_votes(promoted_votes: usize, organic_votes: usize, rng_seed: u64) -> Label {
    match promoted_votes.cmp(&organic_votes) {
        std::cmp::Ordering::Greater => Label::Promoted,
        std::cmp::Ordering::Less => Label::Organic,
        std::cmp::Ordering::Equal => {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            if rng.gen_bool(0.5) {
                Label::Promoted
            } else {
                Label::Organic
            }
        }
    }
}

/// Flat KNN model: raw per-feature series concatenated into one vector per
/// trend, compared with Euclidean distance. No normalization; scale
/// sensitivity is part of the contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedKnnFlat {
    pub features: Vec<String>,
    pub k: usize,
    pub labels: Vec<Label>,
    pub vectors: Vec<Vec<f64>>,
}

/// Concatenate one trend's series in feature order.
pub fn concat_series(series: &[Vec<f64>]) -> Vec<f64> {
    series.iter().flatten().copied().collect()
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl TrainedKnnFlat {
    pub fn train(features: &[String], trends: &[LabeledSeries], k: usize) -> Result<Self> {
        if trends.is_empty() {
            return Err(Error::EmptyInput("knn-flat training set"));
        }
        if k == 0 || k > trends.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {k} invalid for training set of {}",
                trends.len()
            )));
        }
        let vectors: Vec<Vec<f64>> = trends.iter().map(|t| concat_series(&t.series)).collect();
        let dim = vectors[0].len();
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::LengthMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        Ok(TrainedKnnFlat {
            features: features.to_vec(),
            k,
            labels: trends.iter().map(|t| t.label).collect(),
            vectors,
        })
    }

    /// Score = fraction of promoted among the K nearest training vectors.
    pub fn score_vector(&self, query: &[f64]) -> Result<f64> {
        if query.len() != self.vectors[0].len() {
            return Err(Error::LengthMismatch {
                expected: self.vectors[0].len(),
                got: query.len(),
            });
        }
        let distances: Vec<f64> = self
            .vectors
            .iter()
            .map(|v| squared_euclidean(query, v))
            .collect();
        Ok(knn_promoted_fraction(&distances, &self.labels, self.k))
    }

    pub fn score_aligned(&self, query: &[Vec<f64>]) -> Result<f64> {
        self.score_vector(&concat_series(query))
    }

    pub fn score(&self, query: &BTreeMap<String, Vec<f64>>) -> Result<f64> {
        let aligned = align(&self.features, query)?;
        self.score_aligned(&aligned)
    }
}

/// A serializable trained model of any of the three kinds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    KnnDtw(TrainedKnnDtw),
    SaxVsm(WordBags),
    KnnFlat(TrainedKnnFlat),
}

impl TrainedModel {
    pub fn features(&self) -> &[String] {
        match self {
            TrainedModel::KnnDtw(m) => &m.features,
            TrainedModel::SaxVsm(m) => &m.features,
            TrainedModel::KnnFlat(m) => &m.features,
        }
    }

    /// Score an aligned query in [0, 1]; SAX-VSM labels map to 1.0 / 0.0.
    pub fn score_aligned(&self, query: &[Vec<f64>], rng_seed: u64) -> Result<f64> {
        match self {
            TrainedModel::KnnDtw(m) => m.score_aligned(query),
            TrainedModel::KnnFlat(m) => m.score_aligned(query),
            TrainedModel::SaxVsm(m) => Ok(match m.classify_aligned(query, rng_seed)? {
                Label::Promoted => 1.0,
                Label::Organic => 0.0,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trend(hashtag: &str, label: Label, series: Vec<Vec<f64>>) -> LabeledSeries {
        LabeledSeries {
            hashtag: hashtag.into(),
            label,
            series,
        }
    }

    fn ramp(offset: f64) -> Vec<f64> {
        (0..35).map(|i| i as f64 * 0.1 + offset).collect()
    }

    #[test]
    fn knn_dtw_self_match_scores_one() {
        let features = vec!["f".to_string()];
        let trends = vec![
            trend("p", Label::Promoted, vec![ramp(0.0)]),
            trend("o", Label::Organic, vec![ramp(10.0)]),
        ];
        let model = TrainedKnnDtw::train(&features, &trends, 1, 5).unwrap();
        let score = model.score_aligned(&[ramp(0.0)]).unwrap();
        assert_eq!(score, 1.0);
    }

    #[test]
    fn knn_dtw_all_organic_neighbors_scores_zero() {
        let features = vec!["f".to_string()];
        let mut trends: Vec<LabeledSeries> = (0..4)
            .map(|i| {
                trend(
                    &format!("o{i}"),
                    Label::Organic,
                    vec![ramp(i as f64 * 0.01)],
                )
            })
            .collect();
        trends.push(trend("p", Label::Promoted, vec![ramp(100.0)]));
        let model = TrainedKnnDtw::train(&features, &trends, 4, 5).unwrap();
        assert_eq!(model.score_aligned(&[ramp(0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn knn_dtw_scores_average_across_features() {
        // 5 training trends, K=5: every neighbor set is the whole training
        // set, so each feature contributes the global promoted fraction.
        let features = vec!["a".to_string(), "b".to_string()];
        let trends: Vec<LabeledSeries> = (0..5)
            .map(|i| {
                let label = if i < 2 {
                    Label::Promoted
                } else {
                    Label::Organic
                };
                trend(
                    &format!("t{i}"),
                    label,
                    vec![ramp(i as f64), ramp(-(i as f64))],
                )
            })
            .collect();
        let model = TrainedKnnDtw::train(&features, &trends, 5, 5).unwrap();
        let score = model.score_aligned(&[ramp(0.0), ramp(0.0)]).unwrap();
        assert!((score - 0.4).abs() < 1e-12);
    }

    #[test]
    fn knn_dtw_missing_feature_error() {
        let features = vec!["a".to_string()];
        let trends = vec![
            trend("p", Label::Promoted, vec![ramp(0.0)]),
            trend("o", Label::Organic, vec![ramp(1.0)]),
        ];
        let model = TrainedKnnDtw::train(&features, &trends, 1, 5).unwrap();
        let query: BTreeMap<String, Vec<f64>> = [("b".to_string(), ramp(0.0))].into();
        assert!(matches!(model.score(&query), Err(Error::MissingFeature(_))));
    }

    #[test]
    fn sax_vsm_set_semantics() {
        let features = vec!["f".to_string()];
        let trends = vec![
            trend("p1", Label::Promoted, vec![ramp(0.0)]),
            trend("p2", Label::Promoted, vec![ramp(5.0)]), // same word: affine shift
            trend(
                "o",
                Label::Organic,
                vec![ramp(0.0).iter().rev().copied().collect()],
            ),
        ];
        let bags = WordBags::train(&features, &trends, 4, 5).unwrap();
        assert_eq!(bags.promoted[0].len(), 1);
        assert_eq!(bags.organic[0].len(), 1);
    }

    #[test]
    fn sax_vsm_single_class_error() {
        let features = vec!["f".to_string()];
        let trends = vec![trend("p", Label::Promoted, vec![ramp(0.0)])];
        assert!(matches!(
            WordBags::train(&features, &trends, 4, 5),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn sax_vsm_majority_wins() {
        // 4 features: query matches promoted bag on 3, organic on 1.
        let up = ramp(0.0);
        let down: Vec<f64> = ramp(0.0).iter().rev().copied().collect();
        let features: Vec<String> = (0..4).map(|i| format!("f{i}")).collect();
        let trends = vec![
            trend(
                "p",
                Label::Promoted,
                vec![up.clone(), up.clone(), up.clone(), down.clone()],
            ),
            trend(
                "o",
                Label::Organic,
                vec![down.clone(), down.clone(), down.clone(), up.clone()],
            ),
        ];
        let bags = WordBags::train(&features, &trends, 4, 5).unwrap();
        let query = vec![up.clone(), up.clone(), up.clone(), up.clone()];
        assert_eq!(bags.classify_aligned(&query, 1).unwrap(), Label::Promoted);
    }

    #[test]
    fn sax_vsm_tie_breaks_randomly_but_deterministically() {
        let up = ramp(0.0);
        let down: Vec<f64> = ramp(0.0).iter().rev().copied().collect();
        let features = vec!["f".to_string()];
        let trends = vec![
            trend("p", Label::Promoted, vec![up.clone()]),
            trend("o", Label::Organic, vec![up.clone()]),
        ];
        let bags = WordBags::train(&features, &trends, 4, 5).unwrap();
        // word in both bags -> tie for the matching query; no-match tie for
        // the other query.
        for query in [vec![up.clone()], vec![down.clone()]] {
            let a = bags.classify_aligned(&query, 99).unwrap();
            let b = bags.classify_aligned(&query, 99).unwrap();
            assert_eq!(a, b);
        }
        // over many seeds the tie lands near 50/50
        let mut promoted = 0;
        for seed in 0..10_000u64 {
            if bags
                .classify_aligned(std::slice::from_ref(&up), seed)
                .unwrap()
                == Label::Promoted
            {
                promoted += 1;
            }
        }
        let fraction = promoted as f64 / 10_000.0;
        assert!((fraction - 0.5).abs() < 0.02, "tie fraction {fraction}");
    }

    #[test]
    fn knn_flat_exact_match() {
        let features = vec!["f".to_string()];
        let trends = vec![
            trend("o", Label::Organic, vec![ramp(0.0)]),
            trend("p", Label::Promoted, vec![ramp(50.0)]),
        ];
        let model = TrainedKnnFlat::train(&features, &trends, 1).unwrap();
        assert_eq!(model.score_aligned(&[ramp(0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn knn_flat_fraction_of_five() {
        let features = vec!["f".to_string()];
        let trends: Vec<LabeledSeries> = (0..5)
            .map(|i| {
                let label = if i < 2 {
                    Label::Promoted
                } else {
                    Label::Organic
                };
                trend(&format!("t{i}"), label, vec![ramp(i as f64)])
            })
            .collect();
        let model = TrainedKnnFlat::train(&features, &trends, 5).unwrap();
        assert_eq!(model.score_aligned(&[ramp(0.0)]).unwrap(), 0.4);
    }

    #[test]
    fn knn_flat_scale_sensitivity() {
        // scaling one feature by 1000 changes the neighbor set
        let features = vec!["a".to_string(), "b".to_string()];
        let base: Vec<f64> = (0..35).map(|i| (i % 5) as f64).collect();
        let trends = vec![
            trend("p", Label::Promoted, vec![ramp(1.0), base.clone()]),
            trend(
                "o",
                Label::Organic,
                vec![ramp(0.0), base.iter().map(|v| v + 0.1).collect()],
            ),
        ];
        let model = TrainedKnnFlat::train(&features, &trends, 1).unwrap();
        let query = vec![ramp(0.1), base.clone()];
        let unscaled = model.score_aligned(&query).unwrap();

        let scaled_trends: Vec<LabeledSeries> = trends
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.series[1] = t.series[1].iter().map(|v| v * 1000.0).collect();
                t
            })
            .collect();
        let scaled_model = TrainedKnnFlat::train(&features, &scaled_trends, 1).unwrap();
        let scaled_query = vec![ramp(0.1), base.iter().map(|v| v * 1000.0).collect()];
        let scaled = scaled_model.score_aligned(&scaled_query).unwrap();
        assert_ne!(unscaled, scaled);
    }

    #[test]
    fn knn_flat_dimension_mismatch() {
        let features = vec!["f".to_string()];
        let trends = vec![
            trend("p", Label::Promoted, vec![ramp(0.0)]),
            trend("o", Label::Organic, vec![ramp(1.0)]),
        ];
        let model = TrainedKnnFlat::train(&features, &trends, 1).unwrap();
        assert!(matches!(
            model.score_vector(&[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_training_trend_never_decreases_fraction() {
        let features = vec!["f".to_string()];
        let mut trends = vec![
            trend("p", Label::Promoted, vec![ramp(0.0)]),
            trend("o1", Label::Organic, vec![ramp(0.05)]),
            trend("o2", Label::Organic, vec![ramp(-0.05)]),
        ];
        let model = TrainedKnnDtw::train(&features, &trends, 3, 5).unwrap();
        let before = model.score_aligned(&[ramp(0.0)]).unwrap();
        trends.push(trend("p2", Label::Promoted, vec![ramp(0.0)]));
        let model = TrainedKnnDtw::train(&features, &trends, 3, 5).unwrap();
        let after = model.score_aligned(&[ramp(0.0)]).unwrap();
        assert!(after >= before);
    }

    #[test]
    fn model_serialization_roundtrip() {
        let features = vec!["f".to_string()];
        let trends = vec![
            trend("p", Label::Promoted, vec![ramp(0.0)]),
            trend("o", Label::Organic, vec![ramp(1.0)]),
        ];
        let model = TrainedModel::KnnDtw(TrainedKnnDtw::train(&features, &trends, 1, 5).unwrap());
        let json = serde_json::to_string(&model).unwrap();
        let back: TrainedModel = serde_json::from_str(&json).unwrap();
        let q = vec![ramp(0.0)];
        assert_eq!(
            model.score_aligned(&q, 0).unwrap(),
            back.score_aligned(&q, 0).unwrap()
        );
    }
}
