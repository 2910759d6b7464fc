//! Dynamic time warping with squared point-wise cost, plus pairwise
//! distance matrices over coarsened series.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::paa;
use crate::error::{Error, Result};

/// Symmetric matrix of pairwise DTW distances with zero diagonal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub size: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }
}

/// Cumulative warping cost between two series.
///
/// Cell cost is the squared difference; the recurrence is
/// `g(t,t') = cost(t,t') + min{g(t-1,t'-1), g(t-1,t'), g(t,t'-1)}` with the
/// full table and no warping-window constraint. The final cumulative cost is
/// returned without a square root; nearest-neighbor ranking only needs the
/// ordering, which is monotone either way.
pub fn dtw_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyInput("dtw_distance series"));
    }
    Ok(dtw_unchecked(x, y))
}

/// DTW inner loop over a single rolling row.
pub(crate) fn dtw_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let m = y.len();
    let mut row = vec![f64::INFINITY; m];
    for (t, &xv) in x.iter().enumerate() {
        let mut prev_diag = if t == 0 { 0.0 } else { f64::INFINITY };
        for (tp, &yv) in y.iter().enumerate() {
            let d = xv - yv;
            let cost = d * d;
            let up = row[tp]; // g(t-1, t')
            let left = if tp == 0 { f64::INFINITY } else { row[tp - 1] };
            // row[tp-1] at this point already holds g(t, t'-1); prev_diag
            // holds g(t-1, t'-1) saved before overwriting.
            let best = prev_diag.min(up).min(left);
            prev_diag = up;
            row[tp] = cost + if best.is_finite() { best } else { 0.0 };
        }
    }
    row[m - 1]
}

/// Pairwise DTW over a list of equal-length series, coarsened by PAA with
/// segment width `coarsen_width` first. Only the upper triangle is computed;
/// the result is mirrored.
pub fn pairwise_dtw(series_list: &[Vec<f64>], coarsen_width: usize) -> Result<DistanceMatrix> {
    if series_list.is_empty() {
        return Ok(pairwise_from_coarse(&[]));
    }
    if let Some(first) = series_list.first() {
        for s in series_list {
            if s.len() != first.len() {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    got: s.len(),
                });
            }
        }
    }
    let coarse: Vec<Vec<f64>> = series_list
        .iter()
        .map(|s| paa(s, coarsen_width).map(|c| c.values))
        .collect::<Result<_>>()?;
    Ok(pairwise_from_coarse(&coarse))
}

/// Pairwise DTW over series that are already coarsened.
pub fn pairwise_from_coarse(coarse: &[Vec<f64>]) -> DistanceMatrix {
    let n = coarse.len();
    let mut entries = vec![0.0; n * n];
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| dtw_unchecked(&coarse[i], &coarse[j]))
                .collect()
        })
        .collect();
    for (i, row) in rows.iter().enumerate() {
        for (offset, &d) in row.iter().enumerate() {
            let j = i + 1 + offset;
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { size: n, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Exhaustive oracle: minimum cost over all monotone alignment paths
    /// from (0,0) to (n-1,m-1) with steps (1,0), (0,1), (1,1).
    pub fn dtw_brute_force(x: &[f64], y: &[f64]) -> f64 {
        fn go(x: &[f64], y: &[f64], i: usize, j: usize) -> f64 {
            let d = x[i] - y[j];
            let cost = d * d;
            if i == x.len() - 1 && j == y.len() - 1 {
                return cost;
            }
            let mut best = f64::INFINITY;
            if i + 1 < x.len() {
                best = best.min(go(x, y, i + 1, j));
            }
            if j + 1 < y.len() {
                best = best.min(go(x, y, i, j + 1));
            }
            if i + 1 < x.len() && j + 1 < y.len() {
                best = best.min(go(x, y, i + 1, j + 1));
            }
            cost + best
        }
        go(x, y, 0, 0)
    }

    #[test]
    fn identical_series_distance_zero() {
        let x = [1.0, 5.0, -2.0, 4.0];
        assert_eq!(dtw_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn single_cell() {
        assert_eq!(dtw_distance(&[0.0], &[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn warping_absorbs_insertion() {
        // Brute-force over monotone paths gives 1.
        assert_eq!(dtw_distance(&[1.0, 2.0, 3.0], &[1.0, 3.0]).unwrap(), 1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(dtw_distance(&[], &[1.0]).is_err());
        assert!(dtw_distance(&[1.0], &[]).is_err());
    }

    #[test]
    fn matches_brute_force_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(1..=8);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let fast = dtw_distance(&x, &y).unwrap();
            let slow = dtw_brute_force(&x, &y);
            assert_abs_diff_eq!(fast, slow, epsilon = 1e-9);
        }
    }

    #[test]
    fn symmetry_and_diagonal_bound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let xy = dtw_distance(&x, &y).unwrap();
            let yx = dtw_distance(&y, &x).unwrap();
            assert_abs_diff_eq!(xy, yx, epsilon = 1e-12);
            let diagonal: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(xy <= diagonal + 1e-12);
            assert!(xy >= 0.0);
        }
    }

    #[test]
    fn pairwise_matches_independent_calls() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let series: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..35).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let matrix = pairwise_dtw(&series, 5).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let ci = paa(&series[i], 5).unwrap().values;
                let cj = paa(&series[j], 5).unwrap().values;
                let expected = if i == j {
                    0.0
                } else {
                    dtw_distance(&ci, &cj).unwrap()
                };
                assert_abs_diff_eq!(matrix.get(i, j), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pairwise_identical_series_is_zero_matrix() {
        let series = vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]; 4];
        let matrix = pairwise_dtw(&series, 1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(matrix.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn pairwise_length_mismatch() {
        let series = vec![vec![1.0, 2.0], vec![1.0, 2.0, 3.0]];
        assert!(matches!(
            pairwise_dtw(&series, 1),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
