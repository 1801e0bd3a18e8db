//! Histogram-based boosting with best-first (leaf-wise) tree growth.
//!
//! Features are bucketed once into equal-frequency bins. Split search then
//! runs over per-bin gradient sums, and each round repeatedly splits the leaf
//! with the largest gain until the leaf budget is used.

use serde::{Deserialize, Serialize};

use super::boost::{boost_rounds, check_boost_params, leaf_weight, BoostParams, BoostVariant, BoostedModel};
use super::grow::{beats, is_pure, GrowConfig, SampleSet};
use super::histogram::{BinMapper, BinStats};
use super::tree::{Node, NodeKind, Tree};
use super::{check_training_data, ModelError};
use crate::dataset::{FeatureMatrix, TargetVector};
use crate::numeric::stable_mean;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafwiseParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub num_leaves: usize,
    pub n_bins: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub base_score: Option<f64>,
}

impl Default for LeafwiseParams {
    fn default() -> Self {
        Self {
            n_rounds: 200,
            learning_rate: 0.1,
            lambda: 1.0,
            num_leaves: 31,
            n_bins: 64,
            min_samples_leaf: 5,
            max_depth: None,
            base_score: None,
        }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    /// Bins `0..=bin` go left.
    bin: usize,
    gain: f64,
}

struct OpenLeaf {
    node: usize,
    depth: usize,
    members: Vec<usize>,
    best: Option<Candidate>,
}

struct Binned<'a> {
    mappers: &'a [BinMapper],
    /// `bins[f][row]`.
    bins: &'a [Vec<u32>],
}

fn find_split(members: &[usize], depth: usize, s: &SampleSet, binned: &Binned, cfg: &GrowConfig) -> Option<Candidate> {
    let n = members.len();
    let msl = cfg.min_samples_leaf;
    if n == 0 || depth >= cfg.max_depth.unwrap_or(usize::MAX) || n < 2 * msl || is_pure(members, s) {
        return None;
    }
    let (mut g_total, mut h_total) = (0.0, 0.0);
    for &k in members {
        g_total += s.grad[k];
        h_total += s.hess[k];
    }
    let parent = cfg.score(g_total, h_total);
    let mut best: Option<Candidate> = None;
    for (f, mapper) in binned.mappers.iter().enumerate() {
        let mut hist = vec![BinStats::default(); mapper.n_bins()];
        for &k in members {
            hist[binned.bins[f][s.row(k)] as usize].add(s.grad[k], s.hess[k]);
        }
        let mut left = BinStats::default();
        for (b, stats) in hist.iter().enumerate().take(hist.len() - 1) {
            left.count += stats.count;
            left.sum_gradient += stats.sum_gradient;
            left.sum_hessian += stats.sum_hessian;
            if stats.count == 0 || left.count < msl || n - left.count < msl {
                continue;
            }
            let gain = cfg.score(left.sum_gradient, left.sum_hessian)
                + cfg.score(g_total - left.sum_gradient, h_total - left.sum_hessian)
                - parent;
            if best.is_none_or(|c| beats(gain, c.gain)) {
                best = Some(Candidate { feature: f, bin: b, gain });
            }
        }
    }
    best.filter(|c| c.gain > 0.0)
}

/// Grows one tree. Returns it with the leaf index of every slot.
fn grow_leafwise(s: &SampleSet, binned: &Binned, cfg: &GrowConfig, num_leaves: usize) -> (Tree, Vec<usize>) {
    let lambda = cfg.lambda;
    let members = s.canonical_order();
    let mut nodes = vec![Node::leaf(leaf_weight(&members, s, lambda), members.len())];
    let best = find_split(&members, 0, s, binned, cfg);
    let mut open = vec![OpenLeaf {
        node: 0,
        depth: 0,
        members,
        best,
    }];
    let mut n_leaves = 1;

    while n_leaves < num_leaves {
        // Largest gain wins; `open` is kept in node order so ties go to the older leaf.
        let mut pick: Option<(usize, f64)> = None;
        for (i, leaf) in open.iter().enumerate() {
            if let Some(c) = leaf.best {
                if pick.is_none_or(|(_, g)| beats(c.gain, g)) {
                    pick = Some((i, c.gain));
                }
            }
        }
        let Some((i, _)) = pick else { break };
        let leaf = open.remove(i);
        let c = leaf.best.expect("picked leaf has a candidate");
        let column = &binned.bins[c.feature];
        let (left_members, right_members): (Vec<usize>, Vec<usize>) = leaf
            .members
            .into_iter()
            .partition(|&k| column[s.row(k)] as usize <= c.bin);

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::leaf(leaf_weight(&left_members, s, lambda), left_members.len()));
        nodes.push(Node::leaf(leaf_weight(&right_members, s, lambda), right_members.len()));
        nodes[leaf.node].kind = NodeKind::Split {
            feature: c.feature,
            threshold: binned.mappers[c.feature].threshold(c.bin),
            left,
            right,
            gain: cfg.gain_scale * c.gain,
        };
        let depth = leaf.depth + 1;
        for (node, members) in [(left, left_members), (right, right_members)] {
            let best = find_split(&members, depth, s, binned, cfg);
            open.push(OpenLeaf {
                node,
                depth,
                members,
                best,
            });
        }
        n_leaves += 1;
    }

    let mut leaf_of_slot = vec![0usize; s.len()];
    for leaf in &open {
        for &k in &leaf.members {
            leaf_of_slot[k] = leaf.node;
        }
    }
    (Tree { nodes }, leaf_of_slot)
}

pub fn fit_boosted_leafwise(
    x: &FeatureMatrix,
    y: &TargetVector,
    params: &LeafwiseParams,
) -> Result<BoostedModel, ModelError> {
    check_training_data(x, y)?;
    check_boost_params(params.learning_rate, params.lambda)?;
    if params.num_leaves < 2 {
        return Err(ModelError::InvalidParam(format!(
            "num_leaves must be at least 2, got {}",
            params.num_leaves
        )));
    }
    let columns = x.to_columns();
    let mappers = columns
        .iter()
        .map(|c| BinMapper::fit(c, params.n_bins))
        .collect::<Result<Vec<_>, _>>()?;
    let bins: Vec<Vec<u32>> = columns
        .iter()
        .zip(&mappers)
        .map(|(c, m)| c.iter().map(|&v| m.bin(v) as u32).collect())
        .collect();
    let binned = Binned {
        mappers: &mappers,
        bins: &bins,
    };
    let cfg = GrowConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf.max(1),
        lambda: params.lambda,
        gain_scale: 0.5,
    };
    let base_score = params
        .base_score
        .unwrap_or_else(|| stable_mean(y.values.iter().copied()));
    let rows: Vec<usize> = (0..x.n_rows()).collect();

    let trees = boost_rounds(&y.values, params.n_rounds, params.learning_rate, base_score, |g, h| {
        let sample = SampleSet::new(&columns, rows.clone(), g.to_vec(), h.to_vec());
        grow_leafwise(&sample, &binned, &cfg, params.num_leaves)
    });

    Ok(BoostedModel {
        feature_names: x.column_names().to_vec(),
        variant: BoostVariant::HistogramLeafwise,
        base_score,
        learning_rate: params.learning_rate,
        lambda: params.lambda,
        trees,
        params: BoostParams::Leafwise(*params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::{fit_boosted_second_order, SecondOrderParams};

    fn data() -> (FeatureMatrix, TargetVector) {
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|i| vec![(i % 9) as f64, ((i * 7) % 5) as f64 * 0.5, (i % 4) as f64])
            .collect();
        let y = rows.iter().map(|r| r[0] * 2.0 - r[1] * r[2] + (r[0] * r[1]).sin()).collect();
        (FeatureMatrix::unnamed(&rows).unwrap(), TargetVector::new("y", y).unwrap())
    }

    #[test]
    fn stump_matches_exact_depth_one() {
        let (x, y) = data();
        let lw = LeafwiseParams {
            n_rounds: 5,
            num_leaves: 2,
            min_samples_leaf: 1,
            ..Default::default()
        };
        let ex = SecondOrderParams {
            n_rounds: 5,
            max_depth: Some(1),
            min_samples_leaf: 1,
            ..Default::default()
        };
        let a = fit_boosted_leafwise(&x, &y, &lw).unwrap();
        let b = fit_boosted_second_order(&x, &y, &ex).unwrap();
        for row in x.rows() {
            assert!((a.predict_row(row) - b.predict_row(row)).abs() < 1e-9);
        }
    }

    #[test]
    fn leaf_budget_respected() {
        let (x, y) = data();
        let m = fit_boosted_leafwise(
            &x,
            &y,
            &LeafwiseParams {
                n_rounds: 3,
                num_leaves: 5,
                min_samples_leaf: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(m.trees.iter().all(|t| t.n_leaves() <= 5));
        assert!(m.trees.iter().any(|t| t.n_leaves() == 5));
    }

    #[test]
    fn constant_target_has_no_trees() {
        let (x, _) = data();
        let y = TargetVector::new("y", vec![-2.5; 120]).unwrap();
        let m = fit_boosted_leafwise(&x, &y, &LeafwiseParams::default()).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict_row(&[0.0, 0.0, 0.0]), -2.5);
    }

    #[test]
    fn thresholds_are_bin_cuts() {
        let (x, y) = data();
        let m = fit_boosted_leafwise(&x, &y, &LeafwiseParams { n_rounds: 2, ..Default::default() }).unwrap();
        // Column 0 takes values 0..8, so every cut is a half-integer.
        for t in &m.trees {
            for (f, thr, _) in t.splits() {
                if f == 0 {
                    assert_eq!(thr.fract(), 0.5);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let (x, y) = data();
        assert!(fit_boosted_leafwise(&x, &y, &LeafwiseParams { n_bins: 1, ..Default::default() }).is_err());
        assert!(fit_boosted_leafwise(&x, &y, &LeafwiseParams { num_leaves: 1, ..Default::default() }).is_err());
    }
}
