//! Versioned JSON encoding of trained models.
//!
//! Trees are stored as parallel arrays indexed by node id. Leaves carry
//! `feature_index = -1` and child indices of `-1`. Floats are written in
//! shortest round-trip form, so a decoded model predicts bit-for-bit the same.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::boost::{BoostParams, BoostVariant, BoostedModel, SecondOrderParams};
use super::forest::{ForestModel, ForestParams};
use super::leafwise::LeafwiseParams;
use super::linear::LinearModel;
use super::tree::{Node, NodeKind, Tree, TreeModel, TreeParams};
use super::{Model, ModelError, ModelKind};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    format_version: u64,
    kind: ModelKind,
    feature_names: Vec<String>,
    params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intercept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trees: Option<Vec<TreeArrays>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeArrays {
    feature_index: Vec<i64>,
    threshold: Vec<f64>,
    left_child: Vec<i64>,
    right_child: Vec<i64>,
    leaf_value: Vec<f64>,
    n_samples: Vec<usize>,
    gain: Vec<f64>,
}

impl From<&Tree> for TreeArrays {
    fn from(tree: &Tree) -> Self {
        let n = tree.nodes.len();
        let mut a = TreeArrays {
            feature_index: Vec::with_capacity(n),
            threshold: Vec::with_capacity(n),
            left_child: Vec::with_capacity(n),
            right_child: Vec::with_capacity(n),
            leaf_value: Vec::with_capacity(n),
            n_samples: Vec::with_capacity(n),
            gain: Vec::with_capacity(n),
        };
        for node in &tree.nodes {
            let (f, t, l, r, g) = match node.kind {
                NodeKind::Leaf => (-1, 0.0, -1, -1, 0.0),
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    gain,
                } => (feature as i64, threshold, left as i64, right as i64, gain),
            };
            a.feature_index.push(f);
            a.threshold.push(t);
            a.left_child.push(l);
            a.right_child.push(r);
            a.leaf_value.push(node.value);
            a.n_samples.push(node.n_samples);
            a.gain.push(g);
        }
        a
    }
}

fn decode_err(msg: impl Into<String>) -> ModelError {
    ModelError::Decode(msg.into())
}

impl TreeArrays {
    /// Rebuilds the tree, checking that the arrays describe a single rooted
    /// binary tree whose children always follow their parent.
    fn into_tree(self, n_features: usize) -> Result<Tree, ModelError> {
        let n = self.feature_index.len();
        if n == 0 {
            return Err(decode_err("tree has no nodes"));
        }
        let lens = [
            self.threshold.len(),
            self.left_child.len(),
            self.right_child.len(),
            self.leaf_value.len(),
            self.n_samples.len(),
            self.gain.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(decode_err("tree arrays differ in length"));
        }
        let mut referenced = vec![false; n];
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let f = self.feature_index[i];
            let kind = if f < 0 {
                NodeKind::Leaf
            } else {
                let feature = f as usize;
                if feature >= n_features {
                    return Err(decode_err(format!("node {i} splits on unknown feature {f}")));
                }
                let child = |c: i64| -> Result<usize, ModelError> {
                    if c <= i as i64 || c >= n as i64 {
                        return Err(decode_err(format!("node {i} has invalid child {c}")));
                    }
                    Ok(c as usize)
                };
                let (left, right) = (child(self.left_child[i])?, child(self.right_child[i])?);
                for c in [left, right] {
                    if std::mem::replace(&mut referenced[c], true) {
                        return Err(decode_err(format!("node {c} has two parents")));
                    }
                }
                NodeKind::Split {
                    feature,
                    threshold: self.threshold[i],
                    left,
                    right,
                    gain: self.gain[i],
                }
            };
            nodes.push(Node {
                kind,
                value: self.leaf_value[i],
                n_samples: self.n_samples[i],
            });
        }
        if let Some(orphan) = (1..n).find(|&i| !referenced[i]) {
            return Err(decode_err(format!("node {orphan} is unreachable")));
        }
        Ok(Tree { nodes })
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("parameter structs serialize")
}

/// Compact JSON for `model`. Equal models produce identical bytes.
pub fn serialize_model(model: &Model) -> String {
    let mut env = Envelope {
        format_version: FORMAT_VERSION,
        kind: model.kind(),
        feature_names: model.feature_names().to_vec(),
        params: Value::Object(Default::default()),
        weights: None,
        intercept: None,
        base_score: None,
        learning_rate: None,
        lambda: None,
        trees: None,
    };
    let arrays = |trees: &[Tree]| Some(trees.iter().map(TreeArrays::from).collect());
    match model {
        Model::Linear(m) => {
            env.weights = Some(m.weights.clone());
            env.intercept = Some(m.intercept);
        }
        Model::Tree(m) => {
            env.params = to_value(&m.params);
            env.trees = arrays(std::slice::from_ref(&m.tree));
        }
        Model::Forest(m) => {
            env.params = to_value(&m.params);
            env.trees = arrays(&m.trees);
        }
        Model::Boosted(m) => {
            env.params = match &m.params {
                BoostParams::SecondOrder(p) => to_value(p),
                BoostParams::Leafwise(p) => to_value(p),
            };
            env.base_score = Some(m.base_score);
            env.learning_rate = Some(m.learning_rate);
            env.lambda = Some(m.lambda);
            env.trees = arrays(&m.trees);
        }
    }
    serde_json::to_string(&env).expect("model envelope serializes")
}

fn required<T>(field: Option<T>, name: &str) -> Result<T, ModelError> {
    field.ok_or_else(|| decode_err(format!("missing field `{name}`")))
}

fn params<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, ModelError> {
    serde_json::from_value(v).map_err(|e| decode_err(format!("params: {e}")))
}

pub fn deserialize_model(json: &str) -> Result<Model, ModelError> {
    let raw: Value = serde_json::from_str(json).map_err(|e| decode_err(e.to_string()))?;
    let version = raw
        .get("format_version")
        .ok_or_else(|| decode_err("missing field `format_version`"))?
        .as_u64()
        .ok_or_else(|| decode_err("format_version is not an unsigned integer"))?;
    if version != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let env: Envelope = serde_json::from_value(raw).map_err(|e| decode_err(e.to_string()))?;
    let p = env.feature_names.len();
    let trees = |arrays: Option<Vec<TreeArrays>>| -> Result<Vec<Tree>, ModelError> {
        required(arrays, "trees")?
            .into_iter()
            .map(|a| a.into_tree(p))
            .collect()
    };

    let model = match env.kind {
        ModelKind::Linear => {
            let weights = required(env.weights, "weights")?;
            if weights.len() != p {
                return Err(decode_err(format!("{} weights for {p} features", weights.len())));
            }
            Model::Linear(LinearModel {
                feature_names: env.feature_names,
                weights,
                intercept: required(env.intercept, "intercept")?,
            })
        }
        ModelKind::Tree => {
            let params: TreeParams = params(env.params)?;
            let mut t = trees(env.trees)?;
            if t.len() != 1 {
                return Err(decode_err(format!("tree model holds {} trees", t.len())));
            }
            Model::Tree(TreeModel {
                feature_names: env.feature_names,
                params,
                tree: t.remove(0),
            })
        }
        ModelKind::Forest => {
            let params: ForestParams = params(env.params)?;
            let t = trees(env.trees)?;
            if t.is_empty() {
                return Err(decode_err("forest holds no trees"));
            }
            Model::Forest(ForestModel {
                feature_names: env.feature_names,
                params,
                trees: t,
            })
        }
        ModelKind::XgbLike | ModelKind::LgbmLike => {
            let (variant, boost_params) = if env.kind == ModelKind::XgbLike {
                let p: SecondOrderParams = params(env.params)?;
                (BoostVariant::SecondOrder, BoostParams::SecondOrder(p))
            } else {
                let p: LeafwiseParams = params(env.params)?;
                (BoostVariant::HistogramLeafwise, BoostParams::Leafwise(p))
            };
            Model::Boosted(BoostedModel {
                variant,
                base_score: required(env.base_score, "base_score")?,
                learning_rate: required(env.learning_rate, "learning_rate")?,
                lambda: required(env.lambda, "lambda")?,
                trees: trees(env.trees)?,
                feature_names: env.feature_names,
                params: boost_params,
            })
        }
    };
    Ok(model)
}
