//! Descriptive statistics shared by the reuse and interest-sharing reports.
//!
//! Medians follow the lower-median convention (`sorted[(n - 1) / 2]`) and
//! quantiles use nearest rank, so every reported value is an element of the
//! underlying population.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean, population standard deviation and lower median of a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments<S> {
    pub count: u64,
    pub mean: S,
    pub sd: S,
    pub median: S,
}

/// Five-number summary with nearest-rank quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles<S> {
    pub min: S,
    pub q1: S,
    pub median: S,
    pub q3: S,
    pub max: S,
}

/// Index of the nearest-rank `p`-quantile in a sorted population of `n`.
pub fn nearest_rank_index(n: usize, p: f64) -> usize {
    debug_assert!(n > 0);
    let rank = (p * n as f64).ceil() as usize;
    rank.clamp(1, n) - 1
}

pub fn lower_median_index(n: usize) -> usize {
    debug_assert!(n > 0);
    (n - 1) / 2
}

fn sort_values<S: Scalar>(values: &mut [S]) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("NaN in statistics input"));
}

/// Moments of `values`; the slice is sorted in place.
pub fn moments<S: Scalar>(values: &mut [S]) -> Result<Moments<S>> {
    moments_with_zeros(values, 0)
}

/// Moments of `values` extended by `zeros` implicit zero entries.
///
/// The zeros are never materialised, which keeps all-pairs statistics over
/// hundreds of millions of non-overlapping user pairs cheap. All values must
/// be non-negative so that the zeros sort first.
pub fn moments_with_zeros<S: Scalar>(values: &mut [S], zeros: u64) -> Result<Moments<S>> {
    let n = values.len() as u64 + zeros;
    if n == 0 {
        return Err(Error::EmptyInput("statistics over an empty population"));
    }
    sort_values(values);
    let count = S::from_count(n);
    let mean = values.iter().copied().sum::<S>() / count;
    let dev: S = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let dev = dev + S::from_count(zeros) * mean * mean;
    let sd = (dev / count).sqrt();
    let median = value_at(values, zeros, lower_median_index(n as usize));
    Ok(Moments { count: n, mean, sd, median })
}

/// Element `idx` of the virtual population `[0; zeros] ++ sorted`.
fn value_at<S: Scalar>(sorted: &[S], zeros: u64, idx: usize) -> S {
    if (idx as u64) < zeros {
        S::zero()
    } else {
        sorted[idx - zeros as usize]
    }
}

/// Five-number summary of `values` (sorted in place); `None` when empty.
pub fn quartiles<S: Scalar>(values: &mut [S]) -> Option<Quartiles<S>> {
    if values.is_empty() {
        return None;
    }
    sort_values(values);
    let n = values.len();
    Some(Quartiles {
        min: values[0],
        q1: values[nearest_rank_index(n, 0.25)],
        median: values[lower_median_index(n)],
        q3: values[nearest_rank_index(n, 0.75)],
        max: values[n - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let m = moments(&mut [50.0f64]).unwrap();
        assert_eq!((m.mean, m.sd, m.median), (50.0, 0.0, 50.0));
    }

    #[test]
    fn lower_median_for_even_counts() {
        let m = moments(&mut [4.0f64, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(m.median, 2.0);
        assert_eq!(m.mean, 2.5);
        assert!((m.sd - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn implicit_zeros_match_materialised_zeros() {
        let mut sparse = vec![0.4f64, 0.1, 0.7];
        let mut dense = vec![0.4f64, 0.1, 0.7, 0.0, 0.0, 0.0, 0.0];
        let a = moments_with_zeros(&mut sparse, 4).unwrap();
        let b = moments(&mut dense).unwrap();
        assert_eq!(a.median, b.median);
        assert!((a.mean - b.mean).abs() < 1e-15);
        assert!((a.sd - b.sd).abs() < 1e-15);
    }

    #[test]
    fn one_weight_one_zero() {
        let m = moments_with_zeros(&mut [0.4f64], 1).unwrap();
        assert!((m.mean - 0.2).abs() < 1e-15);
        assert_eq!(m.median, 0.0);
    }

    #[test]
    fn empty_population_is_an_error() {
        assert!(matches!(moments::<f64>(&mut []), Err(Error::EmptyInput(_))));
        assert!(quartiles::<f64>(&mut []).is_none());
    }

    #[test]
    fn nearest_rank_quartiles() {
        let q = quartiles(&mut [5.0f32, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let q = quartiles(&mut [1.0f64, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((q.q1, q.median, q.q3), (1.0, 2.0, 3.0));
    }
}
