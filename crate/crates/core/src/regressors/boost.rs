//! Gradient boosting with squared-error loss and second-order leaf weights.
//!
//! Each round uses `g_i = ŷ_i - y_i`, `h_i = 1`, splits on
//! `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) - G²/(H+λ)]` and sets leaf weights to
//! `-G/(H+λ)`. Predictions are `base_score + η·Σ_b f_b(x)`.

use serde::{Deserialize, Serialize};

use super::grow::{grow_exact, GrowConfig, SampleSet};
use super::leafwise::LeafwiseParams;
use super::tree::Tree;
use super::{check_training_data, ModelError};
use crate::dataset::{FeatureMatrix, TargetVector};
use crate::numeric::stable_mean;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostVariant {
    /// Exact greedy depth-wise trees.
    SecondOrder,
    /// Best-first trees over quantile histograms.
    HistogramLeafwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Starting prediction; the target mean when absent.
    pub base_score: Option<f64>,
}

impl Default for SecondOrderParams {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            learning_rate: 0.1,
            lambda: 1.0,
            max_depth: Some(8),
            min_samples_leaf: 5,
            base_score: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoostParams {
    SecondOrder(SecondOrderParams),
    Leafwise(LeafwiseParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub feature_names: Vec<String>,
    pub variant: BoostVariant,
    pub base_score: f64,
    pub learning_rate: f64,
    pub lambda: f64,
    /// Leaf values are the unshrunk weights `-G/(H+λ)`.
    pub trees: Vec<Tree>,
    pub params: BoostParams,
}

impl BoostedModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + self.learning_rate * t.predict_row(row))
    }
}

pub(crate) fn check_boost_params(learning_rate: f64, lambda: f64) -> Result<(), ModelError> {
    if !(learning_rate > 0.0 && learning_rate <= 1.0) {
        return Err(ModelError::InvalidParam(format!(
            "learning rate must be in (0, 1], got {learning_rate}"
        )));
    }
    if !(lambda >= 0.0) {
        return Err(ModelError::InvalidParam(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

/// Shared round loop. `grow` receives the current gradients and hessians and
/// returns a tree of leaf weights plus the leaf index of every training row.
/// Single-leaf trees with a zero weight change nothing and are not kept.
pub(crate) fn boost_rounds(
    y: &[f64],
    n_rounds: usize,
    learning_rate: f64,
    base_score: f64,
    mut grow: impl FnMut(&[f64], &[f64]) -> (Tree, Vec<usize>),
) -> Vec<Tree> {
    let n = y.len();
    let mut pred = vec![base_score; n];
    let hess = vec![1.0; n];
    let mut grad = vec![0.0; n];
    let mut trees = Vec::new();
    for _round in 0..n_rounds {
        for i in 0..n {
            grad[i] = pred[i] - y[i];
        }
        let (tree, leaf_of_row) = grow(&grad, &hess);
        if tree.nodes.len() == 1 && tree.nodes[0].value == 0.0 {
            continue;
        }
        for (p, &leaf) in pred.iter_mut().zip(&leaf_of_row) {
            *p += learning_rate * tree.nodes[leaf].value;
        }
        trees.push(tree);
    }
    trees
}

pub(crate) fn leaf_weight(slots: &[usize], s: &SampleSet, lambda: f64) -> f64 {
    let (mut g, mut h) = (0.0, 0.0);
    for &k in slots {
        g += s.grad[k];
        h += s.hess[k];
    }
    let w = -g / (h + lambda);
    if w.is_finite() {
        w
    } else {
        0.0
    }
}

pub fn fit_boosted_second_order(
    x: &FeatureMatrix,
    y: &TargetVector,
    params: &SecondOrderParams,
) -> Result<BoostedModel, ModelError> {
    check_training_data(x, y)?;
    check_boost_params(params.learning_rate, params.lambda)?;
    let columns = x.to_columns();
    let n_features = x.n_cols();
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let cfg = GrowConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf.max(1),
        lambda: params.lambda,
        gain_scale: 0.5,
    };
    let base_score = params
        .base_score
        .unwrap_or_else(|| stable_mean(y.values.iter().copied()));
    let lambda = params.lambda;

    let trees = boost_rounds(&y.values, params.n_rounds, params.learning_rate, base_score, |g, h| {
        let sample = SampleSet::new(&columns, rows.clone(), g.to_vec(), h.to_vec());
        let out = grow_exact(
            &sample,
            &cfg,
            &mut |_| (0..n_features).collect(),
            &|slots, s| leaf_weight(slots, s, lambda),
        );
        (out.tree, out.leaf_of_slot)
    });

    Ok(BoostedModel {
        feature_names: x.column_names().to_vec(),
        variant: BoostVariant::SecondOrder,
        base_score,
        learning_rate: params.learning_rate,
        lambda,
        trees,
        params: BoostParams::SecondOrder(*params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::NodeKind;

    fn step() -> (FeatureMatrix, TargetVector) {
        let x = FeatureMatrix::unnamed(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        (x, TargetVector::new("y", vec![0.0, 0.0, 10.0, 10.0]).unwrap())
    }

    #[test]
    fn single_leaf_weight_is_target_mean() {
        let (x, _) = step();
        let y = TargetVector::new("y", vec![1.0, 2.0, 4.0, 9.0]).unwrap();
        let params = SecondOrderParams {
            n_rounds: 1,
            learning_rate: 1.0,
            lambda: 0.0,
            max_depth: Some(0),
            min_samples_leaf: 1,
            base_score: Some(0.0),
        };
        let m = fit_boosted_second_order(&x, &y, &params).unwrap();
        // g_i = -y_i, h_i = 1: w = -G/H = sum(y)/n.
        assert_eq!(m.trees.len(), 1);
        assert_eq!(m.trees[0].nodes[0].value, 4.0);
    }

    #[test]
    fn huge_lambda_pins_predictions_to_base() {
        let (x, y) = step();
        let params = SecondOrderParams {
            lambda: 1e12,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let m = fit_boosted_second_order(&x, &y, &params).unwrap();
        for row in x.rows() {
            assert!((m.predict_row(row) - m.base_score).abs() < 1e-6);
        }
        for t in &m.trees {
            assert!(t.nodes.iter().all(|n| n.value.abs() < 1e-9));
        }
    }

    #[test]
    fn step_fixture_fits_in_one_round() {
        let (x, y) = step();
        let params = SecondOrderParams {
            n_rounds: 2,
            learning_rate: 1.0,
            lambda: 0.0,
            max_depth: Some(1),
            min_samples_leaf: 1,
            base_score: None,
        };
        let m = fit_boosted_second_order(&x, &y, &params).unwrap();
        // base 5, g = [5,5,-5,-5]; gains at 0.5/1.5/2.5 are 16.7/50/16.7, weights -5 and +5.
        let root = m.trees[0].nodes[0];
        match root.kind {
            NodeKind::Split { threshold, gain, .. } => {
                assert_eq!(threshold, 1.5);
                assert!((gain - 50.0).abs() < 1e-12);
            }
            NodeKind::Leaf => panic!("expected split"),
        }
        for (row, &t) in x.rows().zip(&y.values) {
            assert_eq!(m.predict_row(row), t);
        }
        // Second round sees zero residuals and adds nothing.
        assert_eq!(m.trees.len(), 1);
    }

    #[test]
    fn constant_target_has_no_trees() {
        let (x, _) = step();
        let y = TargetVector::new("y", vec![0.3; 4]).unwrap();
        let m = fit_boosted_second_order(&x, &y, &SecondOrderParams::default()).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict_row(&[1.0]), 0.3);
    }

    #[test]
    fn rejects_bad_params() {
        let (x, y) = step();
        for p in [
            SecondOrderParams { learning_rate: 0.0, ..Default::default() },
            SecondOrderParams { learning_rate: 1.5, ..Default::default() },
            SecondOrderParams { lambda: -1.0, ..Default::default() },
        ] {
            assert!(fit_boosted_second_order(&x, &y, &p).is_err());
        }
    }
}
