//! Bagged regression trees with per-node feature subsampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on_sample, Tree, TreeParams};
use super::{check_training_data, ModelError};
use crate::dataset::{FeatureMatrix, TargetVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Fraction of features drawn at each node, rounded up to at least one.
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            tree: TreeParams::default(),
            feature_fraction: 1.0 / 3.0,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestParams {
    pub fn features_per_node(&self, n_features: usize) -> usize {
        ((self.feature_fraction * n_features as f64).ceil() as usize).clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub feature_names: Vec<String>,
    pub params: ForestParams,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Unweighted mean of the tree outputs.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Random stream for tree `index`, independent of scheduling.
fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn fit_one(columns: &[Vec<f64>], y: &[f64], params: &ForestParams, index: usize) -> Tree {
    let n = y.len();
    let p = columns.len();
    let k = params.features_per_node(p);
    let mut rng = tree_rng(params.seed, index);
    let rows: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut select = |n_features: usize| -> Vec<usize> {
        if k >= n_features {
            (0..n_features).collect()
        } else {
            rand::seq::index::sample(&mut rng, n_features, k).into_vec()
        }
    };
    fit_tree_on_sample(columns, y, rows, &params.tree, &mut select)
}

pub fn fit_forest(x: &FeatureMatrix, y: &TargetVector, params: &ForestParams) -> Result<ForestModel, ModelError> {
    check_training_data(x, y)?;
    if params.n_trees == 0 {
        return Err(ModelError::InvalidParam("n_trees must be at least 1".into()));
    }
    if !(params.feature_fraction > 0.0 && params.feature_fraction <= 1.0) {
        return Err(ModelError::InvalidParam("feature_fraction must be in (0, 1]".into()));
    }
    let columns = x.to_columns();

    #[cfg(feature = "parallel")]
    let trees = {
        use rayon::prelude::*;
        (0..params.n_trees)
            .into_par_iter()
            .map(|b| fit_one(&columns, &y.values, params, b))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let trees = (0..params.n_trees)
        .map(|b| fit_one(&columns, &y.values, params, b))
        .collect();

    Ok(ForestModel {
        feature_names: x.column_names().to_vec(),
        params: *params,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::fit_tree;

    fn data() -> (FeatureMatrix, TargetVector) {
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| vec![(i % 13) as f64, (i % 7) as f64 * 0.5, (i / 9) as f64])
            .collect();
        let y = (0..80).map(|i| ((i % 13) as f64).sqrt() * 3.0 + (i % 7) as f64).collect();
        (FeatureMatrix::unnamed(&rows).unwrap(), TargetVector::new("y", y).unwrap())
    }

    #[test]
    fn single_full_tree_equals_cart() {
        let (x, y) = data();
        let tree_params = TreeParams {
            max_depth: Some(4),
            min_samples_leaf: 2,
        };
        let params = ForestParams {
            n_trees: 1,
            tree: tree_params,
            feature_fraction: 1.0,
            bootstrap: false,
            seed: 9,
        };
        let forest = fit_forest(&x, &y, &params).unwrap();
        let tree = fit_tree(&x, &y, &tree_params).unwrap();
        assert_eq!(forest.trees[0], tree.tree);
    }

    #[test]
    fn constant_target_everywhere() {
        let (x, _) = data();
        let y = TargetVector::new("y", vec![3.25; 80]).unwrap();
        let forest = fit_forest(&x, &y, &ForestParams { n_trees: 7, ..Default::default() }).unwrap();
        for row in x.rows() {
            assert_eq!(forest.predict_row(row), 3.25);
        }
    }

    #[test]
    fn mean_of_trees() {
        let (x, y) = data();
        let forest = fit_forest(&x, &y, &ForestParams { n_trees: 9, ..Default::default() }).unwrap();
        for row in x.rows() {
            let mean = forest.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / 9.0;
            assert!((forest.predict_row(row) - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (x, y) = data();
        let p = ForestParams { n_trees: 5, ..Default::default() };
        assert_eq!(fit_forest(&x, &y, &p).unwrap(), fit_forest(&x, &y, &p).unwrap());
        let q = ForestParams { seed: p.seed + 1, ..p };
        assert_ne!(fit_forest(&x, &y, &p).unwrap().trees, fit_forest(&x, &y, &q).unwrap().trees);
    }

    #[test]
    fn features_per_node_rounds_up() {
        let p = ForestParams::default();
        assert_eq!(p.features_per_node(4), 2);
        assert_eq!(p.features_per_node(3), 1);
        assert_eq!(p.features_per_node(1), 1);
    }

    #[test]
    fn rejects_zero_trees() {
        let (x, y) = data();
        assert!(fit_forest(&x, &y, &ForestParams { n_trees: 0, ..Default::default() }).is_err());
    }
}
