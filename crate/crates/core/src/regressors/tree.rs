//! Regression tree storage, prediction and the exact CART fit.

use serde::{Deserialize, Serialize};

use super::grow::{grow_exact, GrowConfig, SampleSet};
use super::{check_training_data, ModelError};
use crate::dataset::{FeatureMatrix, TargetVector};
use crate::numeric::stable_mean;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Leaf,
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Criterion reduction achieved by this split.
        gain: f64,
    },
}

/// A tree node. `value` is the prediction for leaves; internal nodes carry the
/// value they would predict as a leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub value: f64,
    pub n_samples: usize,
}

impl Node {
    pub fn leaf(value: f64, n_samples: usize) -> Self {
        Self {
            kind: NodeKind::Leaf,
            value,
            n_samples,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }
}

/// Flattened binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf reached by `row`. Goes left iff `x[feature] <= threshold`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i].kind {
                NodeKind::Leaf => return i,
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_index(row)].value
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i].kind {
                NodeKind::Leaf => 0,
                NodeKind::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }

    pub fn splits(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n.kind {
            NodeKind::Split {
                feature,
                threshold,
                gain,
                ..
            } => Some((feature, threshold, gain)),
            NodeKind::Leaf => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: Some(8),
            min_samples_leaf: 5,
        }
    }
}

impl TreeParams {
    pub fn unbounded() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

/// Variance-reduction regression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub feature_names: Vec<String>,
    pub params: TreeParams,
    pub tree: Tree,
}

impl TreeModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

pub(crate) fn grow_config(params: &TreeParams) -> GrowConfig {
    GrowConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf.max(1),
        lambda: 0.0,
        // g = y - mean, h = 1: G_L^2/n_L + G_R^2/n_R - G^2/n is exactly the SSE drop.
        gain_scale: 1.0,
    }
}

/// Fits a CART regression tree on the given sample (row indices, repeats
/// allowed). `select_features` is consulted once per node considered for a
/// split.
pub(crate) fn fit_tree_on_sample(
    columns: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    params: &TreeParams,
    select_features: &mut dyn FnMut(usize) -> Vec<usize>,
) -> Tree {
    let mut ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    ys.sort_by(f64::total_cmp);
    let center = stable_mean(ys);
    let grad: Vec<f64> = rows.iter().map(|&r| y[r] - center).collect();
    let hess = vec![1.0; rows.len()];
    let sample = SampleSet::new(columns, rows, grad, hess);
    let leaf_value = |slots: &[usize], s: &SampleSet| stable_mean(slots.iter().map(|&k| y[s.row(k)]));
    grow_exact(&sample, &grow_config(params), select_features, &leaf_value).tree
}

/// Exact CART fit: every feature, every midpoint between consecutive distinct
/// values, minimizing the summed within-child squared error.
pub fn fit_tree(x: &FeatureMatrix, y: &TargetVector, params: &TreeParams) -> Result<TreeModel, ModelError> {
    check_training_data(x, y)?;
    let columns = x.to_columns();
    let n_features = x.n_cols();
    let tree = fit_tree_on_sample(
        &columns,
        &y.values,
        (0..x.n_rows()).collect(),
        params,
        &mut |_| (0..n_features).collect(),
    );
    Ok(TreeModel {
        feature_names: x.column_names().to_vec(),
        params: *params,
        tree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::{predict, Model};

    fn fixture() -> (FeatureMatrix, TargetVector) {
        let x = FeatureMatrix::unnamed(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let y = TargetVector::new("y", vec![0.0, 0.0, 10.0, 10.0]).unwrap();
        (x, y)
    }

    fn stump_params() -> TreeParams {
        TreeParams {
            max_depth: Some(1),
            min_samples_leaf: 1,
        }
    }

    #[test]
    fn stump_splits_at_midpoint() {
        let (x, y) = fixture();
        // Candidates 0.5, 1.5, 2.5 have SSE 66.67, 0, 66.67; 1.5 wins.
        let m = fit_tree(&x, &y, &stump_params()).unwrap();
        match m.tree.nodes[0].kind {
            NodeKind::Split { feature, threshold, left, right, gain } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
                assert_eq!(m.tree.nodes[left].value, 0.0);
                assert_eq!(m.tree.nodes[right].value, 10.0);
                assert!((gain - 100.0).abs() < 1e-12);
            }
            NodeKind::Leaf => panic!("root should split"),
        }
        assert_eq!(m.tree.n_leaves(), 2);
    }

    #[test]
    fn routing_rule() {
        let (x, y) = fixture();
        let model = Model::Tree(fit_tree(&x, &y, &stump_params()).unwrap());
        let probe = FeatureMatrix::unnamed(&[vec![0.5], vec![2.5], vec![1.5]]).unwrap();
        assert_eq!(predict(&model, &probe).unwrap().values, [0.0, 10.0, 0.0]);
    }

    #[test]
    fn constant_target_single_leaf() {
        let (x, _) = fixture();
        let y = TargetVector::new("y", vec![0.1; 4]).unwrap();
        let m = fit_tree(&x, &y, &TreeParams::unbounded()).unwrap();
        assert_eq!(m.tree.nodes.len(), 1);
        assert_eq!(m.tree.nodes[0].value, 0.1);
    }

    #[test]
    fn unbounded_tree_memorizes() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i * 7 % 40) as f64 * 0.37]).collect();
        let x = FeatureMatrix::unnamed(&rows).unwrap();
        let y = TargetVector::new("y", (0..40).map(|i| ((i * 13) % 17) as f64 - 3.3).collect()).unwrap();
        let m = fit_tree(&x, &y, &TreeParams::unbounded()).unwrap();
        for (row, &t) in x.rows().zip(&y.values) {
            assert_eq!(m.tree.predict_row(row), t);
        }
    }

    #[test]
    fn respects_depth_and_leaf_size() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let x = FeatureMatrix::unnamed(&rows).unwrap();
        let y = TargetVector::new("y", (0..100).map(|i| ((i * i) % 31) as f64).collect()).unwrap();
        let params = TreeParams {
            max_depth: Some(3),
            min_samples_leaf: 7,
        };
        let m = fit_tree(&x, &y, &params).unwrap();
        assert!(m.tree.depth() <= 3);
        assert!(m.tree.nodes.iter().filter(|n| n.is_leaf()).all(|n| n.n_samples >= 7));
    }

    #[test]
    fn leaf_values_are_region_means() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 11) as f64, (i % 5) as f64]).collect();
        let x = FeatureMatrix::unnamed(&rows).unwrap();
        let y = TargetVector::new("y", (0..60).map(|i| (i as f64).sin() * 4.0).collect()).unwrap();
        let m = fit_tree(&x, &y, &TreeParams { max_depth: Some(4), min_samples_leaf: 3 }).unwrap();
        let mut sums = vec![(0.0, 0usize); m.tree.nodes.len()];
        for (row, &t) in x.rows().zip(&y.values) {
            let leaf = m.tree.leaf_index(row);
            sums[leaf].0 += t;
            sums[leaf].1 += 1;
        }
        for (node, (s, c)) in m.tree.nodes.iter().zip(sums) {
            if node.is_leaf() {
                assert_eq!(node.n_samples, c);
                assert!((node.value - s / c as f64).abs() < 1e-12);
            }
        }
    }
}
