//! Regression metrics and the prediction-error distribution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ERROR_BINS: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no samples")]
    Empty,
    #[error("{actual} actual values but {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("target is constant, R² is undefined")]
    ConstantTarget,
    #[error("R² needs at least two samples")]
    TooFewSamples,
    #[error("histogram needs at least one bin")]
    NoBins,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
}

fn check(y: &[f64], y_hat: &[f64]) -> Result<(), MetricsError> {
    if y.len() != y_hat.len() {
        return Err(MetricsError::LengthMismatch {
            actual: y.len(),
            predicted: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

fn sum_sq_residuals(y: &[f64], y_hat: &[f64]) -> f64 {
    y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    check(y, y_hat)?;
    Ok(sum_sq_residuals(y, y_hat) / y.len() as f64)
}

pub fn rmse(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    mse(y, y_hat).map(f64::sqrt)
}

pub fn r2(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricsError> {
    check(y, y_hat)?;
    if y.len() < 2 {
        return Err(MetricsError::TooFewSamples);
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 || y.iter().all(|&v| v == y[0]) {
        return Err(MetricsError::ConstantTarget);
    }
    Ok(1.0 - sum_sq_residuals(y, y_hat) / ss_tot)
}

pub fn evaluate(y: &[f64], y_hat: &[f64]) -> Result<EvalResult, MetricsError> {
    let mse = mse(y, y_hat)?;
    Ok(EvalResult {
        mse,
        rmse: mse.sqrt(),
        r2: r2(y, y_hat)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorHistogram {
    /// `counts.len() + 1` strictly increasing edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl ErrorHistogram {
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.bin_edges
            .windows(2)
            .zip(&self.counts)
            .map(|(w, &c)| (w[0], w[1], c))
    }
}

/// Equal-width histogram of `y - y_hat` over `[min ε, max ε]`. When every
/// error is the same value the range is widened to `ε ± 0.5`.
pub fn error_histogram(y: &[f64], y_hat: &[f64], n_bins: usize) -> Result<ErrorHistogram, MetricsError> {
    check(y, y_hat)?;
    if n_bins == 0 {
        return Err(MetricsError::NoBins);
    }
    let errors: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| a - b).collect();
    let (mut lo, mut hi) = errors
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let mut bin_edges: Vec<f64> = (0..n_bins).map(|i| lo + width * i as f64).collect();
    bin_edges.push(hi);
    let mut counts = vec![0usize; n_bins];
    for e in errors {
        // Last edge is inclusive; anything that rounds past it lands in the last bin.
        let i = (bin_edges.partition_point(|&edge| edge <= e)).saturating_sub(1);
        counts[i.min(n_bins - 1)] += 1;
    }
    Ok(ErrorHistogram { bin_edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mse(&[5.0], &[2.0]).unwrap(), 9.0);
        assert_eq!(mse(&[], &[]), Err(MetricsError::Empty));
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[4.0, 4.0], &[4.0, 4.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0], &[3.0]).unwrap(), 3.0);
    }

    #[test]
    fn r2_examples() {
        let y = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        assert_eq!(r2(&y, &[1.5; 4]).unwrap(), 0.0);
        assert!((r2(&y, &[0.0, 1.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(r2(&[2.0, 2.0], &[1.0, 3.0]), Err(MetricsError::ConstantTarget));
        assert_eq!(r2(&[2.0], &[2.0]), Err(MetricsError::TooFewSamples));
    }

    #[test]
    fn histogram_zero_errors_single_bin() {
        let h = error_histogram(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 3).unwrap();
        let containing_zero = h.bins().position(|(l, r, _)| l <= 0.0 && 0.0 < r).unwrap();
        assert_eq!(h.counts[containing_zero], 3);
        assert_eq!(h.counts.iter().sum::<usize>(), 3);
    }

    #[test]
    fn histogram_symmetric_pair() {
        let h = error_histogram(&[0.0, 0.0], &[1.0, -1.0], 2).unwrap();
        assert_eq!(h.counts, [1, 1]);
        assert_eq!(h.bin_edges, [-1.0, 0.0, 1.0]);
    }

    #[test]
    fn histogram_max_in_last_bin() {
        let y: Vec<f64> = (0..11).map(f64::from).collect();
        let h = error_histogram(&y, &[0.0; 11], 5).unwrap();
        assert_eq!(h.counts, [2, 2, 2, 2, 3]);
        assert!(h.bin_edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn histogram_rejects_zero_bins() {
        assert_eq!(error_histogram(&[1.0], &[1.0], 0), Err(MetricsError::NoBins));
    }
}
