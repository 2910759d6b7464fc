//! The 8-statistic distribution summary and entropy kernels reused by every
//! feature family: min, max, median, mean, standard deviation, skewness,
//! kurtosis, and entropy.

use serde::{Deserialize, Serialize};

/// Number of histogram bins used by [`shannon_entropy`] when summarizing
/// continuous samples. The estimator is a declared convention: equal-width
/// bins over `[min, max]`, entropy in nats.
pub const ENTROPY_BINS: usize = 20;

/// The eight summary statistics applied to every distribution-type feature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub entropy: f64,
}

/// Suffixes of the eight statistics, in the order emitted by
/// [`DistributionSummary::as_array`].
pub const SUMMARY_SUFFIXES: [&str; 8] = [
    "min", "max", "median", "mean", "std", "skewness", "kurtosis", "entropy",
];

impl DistributionSummary {
    pub fn as_array(&self) -> [f64; 8] {
        [
            self.min,
            self.max,
            self.median,
            self.mean,
            self.std_dev,
            self.skewness,
            self.kurtosis,
            self.entropy,
        ]
    }
}

/// Summarize a sample with the eight statistics.
///
/// Conventions: empty input yields the all-zero summary; skewness is
/// `m3 / m2^(3/2)` and kurtosis is raw `m4 / m2^2` (not excess) with central
/// moments `mk`; zero-variance input yields zero skewness and kurtosis; the
/// median of an even-length sample is the mean of the two central order
/// statistics.
pub fn summarize8(values: &[f64]) -> DistributionSummary {
    if values.is_empty() {
        return DistributionSummary::default();
    }
    let n = values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (std_dev, skewness, kurtosis) = if m2 > 0.0 {
        (m2.sqrt(), m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0, 0.0)
    };
    DistributionSummary {
        min,
        max,
        median,
        mean,
        std_dev,
        skewness,
        kurtosis,
        entropy: shannon_entropy(values, ENTROPY_BINS),
    }
}

/// Histogram entropy of a continuous sample, in nats.
///
/// Equal-width bins over `[min, max]`; `H = -sum p_i ln p_i` over non-empty
/// bins. Constant or empty input yields 0.
pub fn shannon_entropy(values: &[f64], bins: usize) -> f64 {
    if values.is_empty() || bins == 0 {
        return 0.0;
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || min.is_nan() || max <= min {
        return 0.0;
    }
    let width = (max - min) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let idx = (((v - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    categorical_entropy(&counts)
}

/// Entropy of a categorical distribution given by counts, in nats.
pub fn categorical_entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_is_all_zero() {
        assert_eq!(summarize8(&[]), DistributionSummary::default());
    }

    #[test]
    fn constant_sample() {
        let s = summarize8(&[5.0, 5.0, 5.0]);
        assert_eq!(s.min, 5.0);
        assert_eq!(s.max, 5.0);
        assert_eq!(s.median, 5.0);
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.kurtosis, 0.0);
        assert_eq!(s.entropy, 0.0);
    }

    #[test]
    fn one_to_five() {
        // Central moments by hand: m2 = 2, m3 = 0, m4 = 6.8.
        let s = summarize8(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_abs_diff_eq!(s.mean, 3.0);
        assert_abs_diff_eq!(s.median, 3.0);
        assert_abs_diff_eq!(s.skewness, 0.0);
        assert_abs_diff_eq!(s.kurtosis, 1.7, epsilon = 1e-12);
        assert_abs_diff_eq!(s.std_dev, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn even_length_median() {
        let s = summarize8(&[1.0, 2.0, 3.0, 10.0]);
        assert_abs_diff_eq!(s.median, 2.5);
    }

    #[test]
    fn shannon_entropy_examples() {
        assert_eq!(shannon_entropy(&[3.0, 3.0, 3.0, 3.0], 20), 0.0);
        // One value per bin: uniform over 20 bins.
        let values: Vec<f64> = (0..20).map(|i| i as f64 + 0.5).collect();
        assert_abs_diff_eq!(shannon_entropy(&values, 20), 20f64.ln(), epsilon = 1e-9);
        // Two bins with masses 1/3 and 2/3.
        let values = [1.0, 1.0, 2.0, 2.0, 2.0, 2.0];
        let expected = -(1.0 / 3.0f64) * (1.0 / 3.0f64).ln() - (2.0 / 3.0f64) * (2.0 / 3.0f64).ln();
        assert_abs_diff_eq!(shannon_entropy(&values, 2), expected, epsilon = 1e-12);
    }

    #[test]
    fn categorical_entropy_examples() {
        assert_eq!(categorical_entropy(&[4]), 0.0);
        assert_abs_diff_eq!(categorical_entropy(&[1, 1]), 2f64.ln(), epsilon = 1e-12);
        let h = categorical_entropy(&[1, 2, 3]);
        let expected: f64 = -(1.0 / 6.0f64) * (1.0 / 6.0f64).ln()
            - (2.0 / 6.0f64) * (2.0 / 6.0f64).ln()
            - (3.0 / 6.0f64) * (3.0 / 6.0f64).ln();
        assert_abs_diff_eq!(h, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(h, 1.0114, epsilon = 1e-4);
        assert_eq!(categorical_entropy(&[0, 0]), 0.0);
    }
}
