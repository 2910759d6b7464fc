//! Time-series dimensionality reduction: piece-wise aggregation (PAA) for
//! KNN-DTW and SAX symbolic words for SAX-VSM.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// A series coarsened by piece-wise aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseSeries {
    pub values: Vec<f64>,
    pub source_length: usize,
    pub segment_count: usize,
}

/// A SAX word: letters indexed into an alphabet of `alphabet_size` symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SaxWord {
    pub letters: Vec<u8>,
    pub alphabet_size: u8,
}

/// Piece-wise aggregation with segment width `p`: each value is the mean of
/// one segment of `p` consecutive points; when `p` does not divide the
/// length, the final segment holds the remainder.
pub fn paa(series: &[f64], segment_width: usize) -> Result<CoarseSeries> {
    let l = series.len();
    if segment_width == 0 || segment_width > l {
        return Err(Error::InvalidParameter(format!(
            "segment width {segment_width} invalid for series of length {l}"
        )));
    }
    let values: Vec<f64> = series
        .chunks(segment_width)
        .map(|chunk| chunk.iter().sum::<f64>() / chunk.len() as f64)
        .collect();
    let segment_count = values.len();
    Ok(CoarseSeries {
        values,
        source_length: l,
        segment_count,
    })
}

/// Aggregate a series into exactly `segments` equal parts (boundaries at
/// `floor(i * L / segments)`), as used by SAX word construction.
pub fn paa_fixed_segments(series: &[f64], segments: usize) -> Result<Vec<f64>> {
    let l = series.len();
    if segments == 0 || segments > l {
        return Err(Error::InvalidParameter(format!(
            "{segments} segments invalid for series of length {l}"
        )));
    }
    Ok((0..segments)
        .map(|i| {
            let start = i * l / segments;
            let end = (i + 1) * l / segments;
            series[start..end].iter().sum::<f64>() / (end - start) as f64
        })
        .collect())
}

/// Breakpoints dividing the standard normal into `alphabet_size`
/// equiprobable intervals: breakpoint `k` is `Phi^-1((k+1)/a)`.
pub fn gaussian_breakpoints(alphabet_size: usize) -> Result<Vec<f64>> {
    if alphabet_size < 2 {
        return Err(Error::InvalidParameter(
            "alphabet size must be at least 2".into(),
        ));
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    Ok((1..alphabet_size)
        .map(|k| {
            let p = k as f64 / alphabet_size as f64;
            // Newton-polish the library inverse CDF so interval
            // probabilities are exact to machine precision.
            let mut x = normal.inverse_cdf(p);
            for _ in 0..3 {
                let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
                if pdf <= f64::MIN_POSITIVE {
                    break;
                }
                x -= (normal.cdf(x) - p) / pdf;
            }
            x
        })
        .collect())
}

/// Encode a series as a SAX word: z-normalize (a zero-variance series maps
/// to all zeros), aggregate to `word_length` segments, and map each segment
/// mean to the letter of its breakpoint interval.
pub fn sax_word(series: &[f64], word_length: usize, alphabet_size: usize) -> Result<SaxWord> {
    let breakpoints = gaussian_breakpoints(alphabet_size)?;
    let n = series.len() as f64;
    if series.is_empty() {
        return Err(Error::EmptyInput("sax_word series"));
    }
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let normalized: Vec<f64> = if var > 0.0 {
        let std = var.sqrt();
        series.iter().map(|v| (v - mean) / std).collect()
    } else {
        vec![0.0; series.len()]
    };
    let segments = paa_fixed_segments(&normalized, word_length)?;
    let letters = segments
        .iter()
        .map(|&v| breakpoints.partition_point(|&b| b <= v) as u8)
        .collect();
    Ok(SaxWord {
        letters,
        alphabet_size: alphabet_size as u8,
    })
}
