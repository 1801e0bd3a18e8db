//! The five regressors and their shared prediction interface.

mod boost;
mod codec;
mod forest;
mod grow;
mod histogram;
mod leafwise;
mod linear;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FeatureMatrix, TargetVector};

pub use boost::{fit_boosted_second_order, BoostParams, BoostVariant, BoostedModel, SecondOrderParams};
pub use codec::{deserialize_model, serialize_model, FORMAT_VERSION};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use histogram::{build_histogram, BinMapper, BinStats, Histogram};
pub use leafwise::{fit_boosted_leafwise, LeafwiseParams};
pub use linear::{fit_linear, LinearModel};
pub use tree::{fit_tree, Node, NodeKind, Tree, TreeModel, TreeParams};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data has no rows")]
    Empty,
    #[error("{rows} feature rows but {targets} targets")]
    RowMismatch { rows: usize, targets: usize },
    #[error("model expects {expected} features, input has {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("model decode error: {0}")]
    Decode(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u64),
}

pub(crate) fn check_training_data(x: &FeatureMatrix, y: &TargetVector) -> Result<(), ModelError> {
    if x.n_rows() == 0 {
        return Err(ModelError::Empty);
    }
    if x.n_rows() != y.len() {
        return Err(ModelError::RowMismatch {
            rows: x.n_rows(),
            targets: y.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Tree,
    Forest,
    XgbLike,
    LgbmLike,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Linear,
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::XgbLike,
        ModelKind::LgbmLike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Tree => "tree",
            Self::Forest => "forest",
            Self::XgbLike => "xgb_like",
            Self::LgbmLike => "lgbm_like",
        }
    }

    pub fn is_tree_based(self) -> bool {
        self != Self::Linear
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown model `{s}` (expected linear, tree, forest, xgb_like or lgbm_like)"))
    }
}

/// Any trained regressor. Immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Boosted(BoostedModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Linear(_) => ModelKind::Linear,
            Self::Tree(_) => ModelKind::Tree,
            Self::Forest(_) => ModelKind::Forest,
            Self::Boosted(b) => match b.variant {
                BoostVariant::SecondOrder => ModelKind::XgbLike,
                BoostVariant::HistogramLeafwise => ModelKind::LgbmLike,
            },
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Self::Linear(m) => &m.feature_names,
            Self::Tree(m) => &m.feature_names,
            Self::Forest(m) => &m.feature_names,
            Self::Boosted(m) => &m.feature_names,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names().len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            Self::Linear(m) => m.predict_row(row),
            Self::Tree(m) => m.tree.predict_row(row),
            Self::Forest(m) => m.predict_row(row),
            Self::Boosted(m) => m.predict_row(row),
        }
    }

    /// Trees making up the model, empty for the linear model.
    pub fn trees(&self) -> Vec<&Tree> {
        match self {
            Self::Linear(_) => Vec::new(),
            Self::Tree(m) => vec![&m.tree],
            Self::Forest(m) => m.trees.iter().collect(),
            Self::Boosted(m) => m.trees.iter().collect(),
        }
    }
}

/// Predicts every row of `x`.
pub fn predict(model: &Model, x: &FeatureMatrix) -> Result<TargetVector, ModelError> {
    if x.n_cols() != model.n_features() {
        return Err(ModelError::ColumnMismatch {
            expected: model.n_features(),
            got: x.n_cols(),
        });
    }
    Ok(TargetVector {
        name: "prediction".to_string(),
        values: x.rows().map(|r| model.predict_row(r)).collect(),
    })
}
