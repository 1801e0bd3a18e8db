//! Ordinary least squares with intercept.
//!
//! Features and target are centered, the normal equations `XᵀX w = Xᵀy` are
//! solved through an eigendecomposition of the Gram matrix, and eigenvalues
//! below a relative cutoff are treated as zero. That yields the minimum-norm
//! weight vector when columns are collinear. The intercept is unpenalized:
//! `b = mean(y) - w · mean(x)`.

#![allow(clippy::needless_range_loop)]

use super::{check_training_data, ModelError};
use crate::dataset::{FeatureMatrix, TargetVector};
use crate::numeric::stable_mean;

/// Eigenvalues at or below this fraction of the largest are dropped.
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and the eigenvectors as columns of the second matrix.
fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = a.len();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for i in 0..p {
            for j in i + 1..p {
                if a[i][j] == 0.0 {
                    continue;
                }
                let theta = (a[j][j] - a[i][i]) / (2.0 * a[i][j]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let (aki, akj) = (a[k][i], a[k][j]);
                    a[k][i] = c * aki - s * akj;
                    a[k][j] = s * aki + c * akj;
                }
                for k in 0..p {
                    let (aik, ajk) = (a[i][k], a[j][k]);
                    a[i][k] = c * aik - s * ajk;
                    a[j][k] = s * aik + c * ajk;
                }
                for row in v.iter_mut() {
                    let (vi, vj) = (row[i], row[j]);
                    row[i] = c * vi - s * vj;
                    row[j] = s * vi + c * vj;
                }
            }
        }
    }
    ((0..p).map(|i| a[i][i]).collect(), v)
}

pub fn fit_linear(x: &FeatureMatrix, y: &TargetVector) -> Result<LinearModel, ModelError> {
    check_training_data(x, y)?;
    let p = x.n_cols();
    let x_mean: Vec<f64> = (0..p).map(|j| stable_mean(x.column(j))).collect();
    let y_mean = stable_mean(y.values.iter().copied());

    let mut gram = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (row, &t) in x.rows().zip(&y.values) {
        let centered: Vec<f64> = row.iter().zip(&x_mean).map(|(v, m)| v - m).collect();
        let yc = t - y_mean;
        for i in 0..p {
            xty[i] += centered[i] * yc;
            for j in i..p {
                gram[i][j] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }

    let (eigvals, eigvecs) = symmetric_eigen(gram);
    let largest = eigvals.iter().fold(0.0f64, |m, &l| m.max(l));
    let mut weights = vec![0.0; p];
    if largest > 0.0 {
        for (k, &lambda) in eigvals.iter().enumerate() {
            if lambda <= RANK_RTOL * largest {
                continue;
            }
            let proj: f64 = (0..p).map(|i| eigvecs[i][k] * xty[i]).sum::<f64>() / lambda;
            for (i, w) in weights.iter_mut().enumerate() {
                *w += proj * eigvecs[i][k];
            }
        }
    }
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearModel {
        feature_names: x.column_names().to_vec(),
        weights,
        intercept,
    })
}
