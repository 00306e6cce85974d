use serde::Serialize;

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 128;

/// Pairwise (cascade) summation. The result depends only on the input order,
/// and rounding error grows as `O(log n)` rather than `O(n)`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Hoeffding radius for the mean of `n` samples in an interval of width
/// `range`: `range·√(ln(2/δ) / 2n)`.
pub fn hoeffding_halfwidth(n: usize, range: f64, delta: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    range * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Two-sided empirical-Bernstein radius (Maurer–Pontil) for samples in
/// `[0, range]`: `√(2V ln(4/δ)/n) + 7·range·ln(4/δ)/(3(n−1))` with `V` the
/// unbiased sample variance.
pub fn empirical_bernstein_halfwidth(values: &[f64], range: f64, delta: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    let log_term = (4.0 / delta).ln();
    (2.0 * var * log_term / n as f64).sqrt() + 7.0 * range * log_term / (3.0 * (n - 1) as f64)
}

/// A Monte Carlo mean with a finite-sample confidence radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub halfwidth: f64,
    pub samples: usize,
    pub seed: u64,
    pub delta: f64,
}

impl Estimate {
    /// Mean of `[0, range]`-valued samples with a Hoeffding radius.
    pub fn bounded(values: &[f64], range: f64, delta: f64, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        Ok(Estimate {
            mean: mean(values),
            halfwidth: hoeffding_halfwidth(values.len(), range, delta),
            samples: values.len(),
            seed,
            delta,
        })
    }

    /// Mean of nonnegative, possibly unbounded samples with an
    /// empirical-Bernstein radius that plugs in the sample maximum as the
    /// range. Heuristic: the range bound is itself estimated.
    pub fn unbounded(values: &[f64], delta: f64, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let range = values.iter().copied().fold(0.0, f64::max);
        Ok(Estimate {
            mean: mean(values),
            halfwidth: empirical_bernstein_halfwidth(values, range, delta),
            samples: values.len(),
            seed,
            delta,
        })
    }
}
