//! Exact greedy tree growth over gradient/hessian statistics.
//!
//! With `g = y - c` and `h = 1` the split score
//! `G_L^2/(H_L+λ) + G_R^2/(H_R+λ) - G^2/(H+λ)` at `λ = 0` equals the drop in
//! summed squared error, so the same grower serves CART and second-order
//! boosting.

use super::tree::{Node, NodeKind, Tree};

/// Relative band inside which two split gains count as tied. Identical
/// partitions reached through different features differ only by summation
/// order, so ties are resolved toward the lower feature index and threshold.
pub(crate) const TIE_RTOL: f64 = 1e-10;

/// True if `candidate` beats `incumbent` by more than the tie band.
pub(crate) fn beats(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_RTOL * incumbent.abs().max(candidate.abs())
}

pub(crate) struct GrowConfig {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub lambda: f64,
    /// Multiplier applied to the raw score difference before it is stored.
    pub gain_scale: f64,
}

impl GrowConfig {
    pub(crate) fn score(&self, g: f64, h: f64) -> f64 {
        let denom = h + self.lambda;
        if denom > 0.0 {
            g * g / denom
        } else {
            0.0
        }
    }
}

/// Training sample addressed by slot; a slot maps to a matrix row (rows may
/// repeat under bootstrap) and carries its own gradient and hessian.
pub(crate) struct SampleSet<'a> {
    columns: &'a [Vec<f64>],
    rows: Vec<usize>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl<'a> SampleSet<'a> {
    pub(crate) fn new(columns: &'a [Vec<f64>], rows: Vec<usize>, grad: Vec<f64>, hess: Vec<f64>) -> Self {
        debug_assert_eq!(rows.len(), grad.len());
        debug_assert_eq!(rows.len(), hess.len());
        Self {
            columns,
            rows,
            grad,
            hess,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn row(&self, slot: usize) -> usize {
        self.rows[slot]
    }

    pub(crate) fn x(&self, feature: usize, slot: usize) -> f64 {
        self.columns[feature][self.rows[slot]]
    }

    pub(crate) fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Slots ordered by (feature values, gradient, hessian). Any summation
    /// done in this order is independent of the input row order.
    pub(crate) fn canonical_order(&self) -> Vec<usize> {
        let mut slots: Vec<usize> = (0..self.len()).collect();
        slots.sort_by(|&a, &b| {
            (0..self.n_features())
                .map(|f| self.x(f, a).total_cmp(&self.x(f, b)))
                .chain([
                    self.grad[a].total_cmp(&self.grad[b]),
                    self.hess[a].total_cmp(&self.hess[b]),
                ])
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        slots
    }
}

pub(crate) struct GrowOutput {
    pub tree: Tree,
    /// Leaf node index for every slot.
    pub leaf_of_slot: Vec<usize>,
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Work {
    node: usize,
    depth: usize,
    /// Slots in canonical order.
    members: Vec<usize>,
    /// Per feature, slots sorted by value (canonical order among ties).
    sorted: Vec<Vec<usize>>,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

pub(crate) fn is_pure(members: &[usize], s: &SampleSet) -> bool {
    let first = members[0];
    members
        .iter()
        .all(|&k| s.grad[k] == s.grad[first] && s.hess[k] == s.hess[first])
}

fn best_split(
    work: &Work,
    features: &[usize],
    s: &SampleSet,
    cfg: &GrowConfig,
    g_total: f64,
    h_total: f64,
) -> Option<Candidate> {
    let n = work.members.len();
    let parent = cfg.score(g_total, h_total);
    let msl = cfg.min_samples_leaf;
    let mut best: Option<Candidate> = None;
    for &f in features {
        let order = &work.sorted[f];
        let (mut gl, mut hl) = (0.0, 0.0);
        for i in 0..n - 1 {
            let k = order[i];
            gl += s.grad[k];
            hl += s.hess[k];
            let n_left = i + 1;
            if n_left < msl || n - n_left < msl {
                continue;
            }
            let (here, next) = (s.x(f, k), s.x(f, order[i + 1]));
            if here >= next {
                continue;
            }
            let gain = cfg.score(gl, hl) + cfg.score(g_total - gl, h_total - hl) - parent;
            if best.is_none_or(|b| beats(gain, b.gain)) {
                best = Some(Candidate {
                    feature: f,
                    threshold: midpoint(here, next),
                    gain,
                });
            }
        }
    }
    best
}

/// Depth-first greedy growth. Nodes are numbered in creation order with the
/// left child created before the right one.
pub(crate) fn grow_exact(
    s: &SampleSet,
    cfg: &GrowConfig,
    select_features: &mut dyn FnMut(usize) -> Vec<usize>,
    leaf_value: &dyn Fn(&[usize], &SampleSet) -> f64,
) -> GrowOutput {
    let n_slots = s.len();
    let members = s.canonical_order();
    let sorted = (0..s.n_features())
        .map(|f| {
            let mut order = members.clone();
            order.sort_by(|&a, &b| s.x(f, a).total_cmp(&s.x(f, b)));
            order
        })
        .collect();

    let mut nodes = vec![Node::leaf(0.0, n_slots)];
    let mut leaf_of_slot = vec![0usize; n_slots];
    let mut go_left = vec![false; n_slots];
    let mut stack = vec![Work {
        node: 0,
        depth: 0,
        members,
        sorted,
    }];

    while let Some(work) = stack.pop() {
        let n = work.members.len();
        let (mut g_total, mut h_total) = (0.0, 0.0);
        for &k in &work.members {
            g_total += s.grad[k];
            h_total += s.hess[k];
        }
        nodes[work.node] = Node::leaf(leaf_value(&work.members, s), n);

        let can_split = n > 0
            && work.depth < cfg.max_depth.unwrap_or(usize::MAX)
            && n >= 2 * cfg.min_samples_leaf.max(1)
            && !is_pure(&work.members, s);
        let candidate = if can_split {
            let mut features = select_features(s.n_features());
            features.sort_unstable();
            best_split(&work, &features, s, cfg, g_total, h_total).filter(|c| c.gain > 0.0)
        } else {
            None
        };

        let Some(c) = candidate else {
            for &k in &work.members {
                leaf_of_slot[k] = work.node;
            }
            continue;
        };

        for &k in &work.members {
            go_left[k] = s.x(c.feature, k) <= c.threshold;
        }
        let split = |list: Vec<usize>| -> (Vec<usize>, Vec<usize>) { list.into_iter().partition(|&k| go_left[k]) };
        let (left_members, right_members) = split(work.members);
        let mut left_sorted = Vec::with_capacity(work.sorted.len());
        let mut right_sorted = Vec::with_capacity(work.sorted.len());
        for list in work.sorted {
            let (l, r) = split(list);
            left_sorted.push(l);
            right_sorted.push(r);
        }

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::leaf(0.0, left_members.len()));
        nodes.push(Node::leaf(0.0, right_members.len()));
        nodes[work.node].kind = NodeKind::Split {
            feature: c.feature,
            threshold: c.threshold,
            left,
            right,
            gain: cfg.gain_scale * c.gain,
        };
        stack.push(Work {
            node: right,
            depth: work.depth + 1,
            members: right_members,
            sorted: right_sorted,
        });
        stack.push(Work {
            node: left,
            depth: work.depth + 1,
            members: left_members,
            sorted: left_sorted,
        });
    }

    GrowOutput {
        tree: Tree { nodes },
        leaf_of_slot,
    }
}
