use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::rules::{Condition, Op};
use super::{argmax_lowest, distinct_thresholds};
use crate::error::{arg_err, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// `x[feature] <= threshold` goes to `left`.
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { label: usize, counts: Vec<usize> },
}

/// Binary decision tree stored as an arena of nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub root: usize,
    pub depth: usize,
    pub n_classes: usize,
}

/// Root-to-leaf traversal record.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePath {
    /// Conditions satisfied along the path, in evaluation order.
    pub conditions: Vec<Condition>,
    pub leaf: usize,
    pub label: usize,
}

impl DecisionTree {
    /// Checks that `nodes` form a single rooted binary tree reaching every
    /// node, and computes its depth.
    pub fn from_nodes(nodes: Vec<Node>, root: usize, n_classes: usize) -> Result<Self> {
        if root >= nodes.len() {
            return arg_err("root index out of range");
        }
        let mut parents = vec![0usize; nodes.len()];
        for node in &nodes {
            match node {
                Node::Internal {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if *left >= nodes.len() || *right >= nodes.len() || left == right {
                        return arg_err("child index out of range or repeated");
                    }
                    if !threshold.is_finite() {
                        return arg_err("tree thresholds must be finite");
                    }
                    parents[*left] += 1;
                    parents[*right] += 1;
                }
                Node::Leaf { label, .. } => {
                    if *label >= n_classes {
                        return arg_err("leaf label out of range");
                    }
                }
            }
        }
        if parents[root] != 0 {
            return arg_err("root has a parent");
        }
        if parents
            .iter()
            .enumerate()
            .any(|(i, &p)| i != root && p != 1)
        {
            return arg_err("every non-root node needs exactly one parent");
        }
        // with unique parents, reaching every node from the root rules out cycles
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![(root, 0usize)];
        let mut depth = 0;
        while let Some((i, d)) = stack.pop() {
            if seen[i] {
                return arg_err("node graph has a cycle");
            }
            seen[i] = true;
            depth = depth.max(d);
            if let Node::Internal { left, right, .. } = &nodes[i] {
                stack.push((*right, d + 1));
                stack.push((*left, d + 1));
            }
        }
        if seen.iter().any(|s| !s) {
            return arg_err("node graph is not connected");
        }
        Ok(DecisionTree {
            nodes,
            root,
            depth,
            n_classes,
        })
    }

    pub fn path(&self, x: &[f64]) -> TreePath {
        let mut i = self.root;
        let mut conditions = Vec::new();
        loop {
            match &self.nodes[i] {
                Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if x[*feature] <= *threshold {
                        conditions.push(Condition::new(*feature, Op::Le, *threshold));
                        i = *left;
                    } else {
                        conditions.push(Condition::new(*feature, Op::Gt, *threshold));
                        i = *right;
                    }
                }
                Node::Leaf { label, .. } => {
                    return TreePath {
                        conditions,
                        leaf: i,
                        label: *label,
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        self.path(x).label
    }

    /// Class frequencies at the reached leaf.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let path = self.path(x);
        let Node::Leaf { counts, label } = &self.nodes[path.leaf] else {
            unreachable!("paths end at leaves")
        };
        let total: usize = counts.iter().sum();
        if total == 0 {
            let mut p = vec![0.0; self.n_classes];
            p[*label] = 1.0;
            return p;
        }
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

pub fn predict_tree(t: &DecisionTree, x: &[f64]) -> usize {
    t.predict(x)
}

/// Split quality `sum_k l_k^2 / n_l + sum_k r_k^2 / n_r` held as a fraction;
/// larger means lower weighted Gini impurity.
#[derive(Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn new(left: &[usize], nl: usize, right: &[usize], nr: usize) -> Self {
        let sq = |c: &[usize]| c.iter().map(|&v| (v as u128) * (v as u128)).sum::<u128>();
        Purity {
            num: sq(left) * nr as u128 + sq(right) * nl as u128,
            den: nl as u128 * nr as u128,
        }
    }

    fn cmp(&self, other: &Purity) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, Vec<usize>, Vec<usize>)> {
        let m = self.x[0].len();
        let total = self.counts(idx);
        let mut best: Option<(Purity, usize, f64, usize, Vec<usize>)> = None;
        for f in 0..m {
            let mut order = idx.to_vec();
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let values: Vec<f64> = order.iter().map(|&i| self.x[i][f]).collect();
            let mut left = vec![0usize; self.n_classes];
            let mut k = 0;
            for (t, boundary) in distinct_thresholds(&values) {
                while k < boundary {
                    left[self.y[order[k]]] += 1;
                    k += 1;
                }
                let nl = boundary;
                let nr = order.len() - boundary;
                if nl < self.min_leaf || nr < self.min_leaf {
                    continue;
                }
                let right: Vec<usize> = total.iter().zip(&left).map(|(a, b)| a - b).collect();
                let p = Purity::new(&left, nl, &right, nr);
                // strict improvement keeps the lowest feature, then lowest threshold
                if best.as_ref().map_or(true, |b| p.cmp(&b.0) == Ordering::Greater) {
                    best = Some((p, f, t, boundary, order.clone()));
                }
            }
        }
        best.map(|(_, f, t, boundary, order)| {
            let mut l = order[..boundary].to_vec();
            let mut r = order[boundary..].to_vec();
            l.sort_unstable();
            r.sort_unstable();
            (f, t, l, r)
        })
    }

    fn grow(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure || depth >= self.max_depth || idx.len() < 2 * self.min_leaf {
            None
        } else {
            self.best_split(idx)
        };
        match split {
            None => {
                let label = argmax_lowest(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
                self.nodes.push(Node::Leaf { label, counts });
                self.nodes.len() - 1
            }
            Some((feature, threshold, l, r)) => {
                let at = self.nodes.len();
                self.nodes.push(Node::Internal {
                    feature,
                    threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                });
                let left = self.grow(&l, depth + 1);
                let right = self.grow(&r, depth + 1);
                self.nodes[at] = Node::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                };
                at
            }
        }
    }
}

/// Greedy CART induction on weighted Gini impurity. Candidate thresholds are
/// midpoints between consecutive distinct values; ties go to the lower
/// feature index, then the lower threshold.
pub fn induce_tree(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    max_depth: usize,
    min_leaf: usize,
) -> Result<DecisionTree> {
    if x.is_empty() {
        return arg_err("cannot induce a tree from no instances");
    }
    if x.len() != y.len() {
        return arg_err("feature matrix and labels are not aligned");
    }
    if max_depth < 1 || min_leaf < 1 {
        return arg_err("max_depth and min_leaf must be at least 1");
    }
    if y.iter().any(|&c| c >= n_classes) {
        return arg_err("label id out of range");
    }
    let m = x[0].len();
    if x.iter().any(|r| r.len() != m || r.iter().any(|v| !v.is_finite())) {
        return arg_err("ragged or non-finite feature matrix");
    }
    let mut b = Builder {
        x,
        y,
        n_classes,
        max_depth,
        min_leaf,
        nodes: Vec::new(),
    };
    let all: Vec<usize> = (0..x.len()).collect();
    let root = b.grow(&all, 0);
    DecisionTree::from_nodes(b.nodes, root, n_classes)
}
