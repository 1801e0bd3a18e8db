//! Gain-based feature importance for tree models.
//!
//! Every split's stored criterion reduction is credited to its feature and
//! summed over all trees; shares are the per-feature totals over the grand
//! total.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regressors::{Model, ModelKind};

#[derive(Debug, Error, PartialEq)]
pub enum ImportanceError {
    #[error("{0} models have no split gains; importance needs a tree-based model")]
    UnsupportedModel(ModelKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub total_gain: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// In model feature order.
    pub features: Vec<FeatureImportance>,
    /// False when no tree has a split; all shares are then 0.
    pub has_splits: bool,
}

impl ImportanceReport {
    /// Features by share, largest first; equal shares keep model order.
    pub fn ranked(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<&FeatureImportance> = self.features.iter().collect();
        v.sort_by(|a, b| b.share.total_cmp(&a.share));
        v
    }
}

pub fn gain_importance(model: &Model) -> Result<ImportanceReport, ImportanceError> {
    if !model.kind().is_tree_based() {
        return Err(ImportanceError::UnsupportedModel(model.kind()));
    }
    let mut totals = vec![0.0; model.n_features()];
    let mut has_splits = false;
    for tree in model.trees() {
        for (feature, _, gain) in tree.splits() {
            totals[feature] += gain.max(0.0);
            has_splits = true;
        }
    }
    let grand: f64 = totals.iter().sum();
    let features = model
        .feature_names()
        .iter()
        .zip(&totals)
        .map(|(name, &total_gain)| FeatureImportance {
            name: name.clone(),
            total_gain,
            share: if grand > 0.0 { total_gain / grand } else { 0.0 },
        })
        .collect();
    Ok(ImportanceReport {
        features,
        has_splits: has_splits && grand > 0.0,
    })
}
