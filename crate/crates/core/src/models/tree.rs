//! CART-style decision tree used by the random forest.
//!
//! Split search is exact: per candidate feature, node values are sorted and
//! every midpoint between consecutive distinct values is scored; the split
//! minimising weighted impurity wins, ties going to the lower feature index
//! and threshold. Leaves keep full class-count vectors.

use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::table::N_CLASSES;

use super::Design;

/// Node-splitting impurity criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    /// `1 − Σ p²`
    Gini,
    /// `−Σ p·ln p`
    Entropy,
}

impl SplitCriterion {
    pub fn name(self) -> &'static str {
        match self {
            SplitCriterion::Gini => "gini",
            SplitCriterion::Entropy => "entropy",
        }
    }

    pub(crate) fn impurity(self, counts: &[u64; N_CLASSES], total: f64) -> f64 {
        match self {
            SplitCriterion::Gini => {
                let mut sum = 0.0;
                for &c in counts {
                    let p = c as f64 / total;
                    sum += p * p;
                }
                1.0 - sum
            }
            SplitCriterion::Entropy => {
                let mut sum = 0.0;
                for &c in counts {
                    if c > 0 {
                        let p = c as f64 / total;
                        sum -= p * p.ln();
                    }
                }
                sum
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [u64; N_CLASSES],
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    root: usize,
}

pub(crate) struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub criterion: SplitCriterion,
    /// Candidate features sampled per node; `None` tries all of them.
    pub features_per_node: Option<usize>,
}

impl DecisionTree {
    /// Class counts at the leaf reached by `row`.
    pub(crate) fn leaf_counts(&self, row: &[f64]) -> &[u64; N_CLASSES] {
        let mut at = self.root;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Leaf majority vote, ties toward the lowest class code.
    pub(crate) fn vote(&self, row: &[f64]) -> usize {
        let counts = self.leaf_counts(row);
        let mut best = 0;
        for c in 1..N_CLASSES {
            if counts[c] > counts[best] {
                best = c;
            }
        }
        best
    }
}

struct Pending {
    rows: Vec<usize>,
    depth: usize,
    slot: usize,
}

/// Grow a tree on the given row multiset (bootstrap duplicates allowed).
pub(crate) fn grow(
    design: Design<'_>,
    labels: &[usize],
    rows: Vec<usize>,
    cfg: &TreeConfig,
    rng: &mut Rng,
) -> DecisionTree {
    let mut nodes = vec![Node::Leaf {
        counts: [0; N_CLASSES],
    }];
    // Explicit stack, LIFO with left pushed last, so nodes are processed in
    // left-first depth-first order and the rng stream is schedule-free.
    let mut stack = vec![Pending {
        rows,
        depth: 0,
        slot: 0,
    }];
    while let Some(Pending { rows, depth, slot }) = stack.pop() {
        let mut counts = [0u64; N_CLASSES];
        for &r in &rows {
            counts[labels[r]] += 1;
        }
        let total = rows.len() as f64;
        let n_classes_present = counts.iter().filter(|&&c| c > 0).count();
        let depth_reached = cfg.max_depth.is_some_and(|limit| depth >= limit);
        if n_classes_present <= 1 || depth_reached || rows.len() < cfg.min_samples_split {
            nodes[slot] = Node::Leaf { counts };
            continue;
        }

        let candidates = match cfg.features_per_node {
            Some(k) if k < design.n_features() => {
                let mut picked = rng.sample_indices(design.n_features(), k);
                picked.sort_unstable();
                picked
            }
            _ => (0..design.n_features()).collect(),
        };

        let Some((feature, threshold)) =
            best_split(design, labels, &rows, &candidates, cfg.criterion, total)
        else {
            nodes[slot] = Node::Leaf { counts };
            continue;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| design.row(r)[feature] < threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let left = nodes.len();
        nodes.push(Node::Leaf {
            counts: [0; N_CLASSES],
        });
        let right = nodes.len();
        nodes.push(Node::Leaf {
            counts: [0; N_CLASSES],
        });
        nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        stack.push(Pending {
            rows: right_rows,
            depth: depth + 1,
            slot: right,
        });
        stack.push(Pending {
            rows: left_rows,
            depth: depth + 1,
            slot: left,
        });
    }
    DecisionTree { nodes, root: 0 }
}

fn best_split(
    design: Design<'_>,
    labels: &[usize],
    rows: &[usize],
    candidates: &[usize],
    criterion: SplitCriterion,
    total: f64,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut best_score = f64::INFINITY;

    let mut totals = [0u64; N_CLASSES];
    for &r in rows {
        totals[labels[r]] += 1;
    }

    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &feature in candidates {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (design.row(r)[feature], labels[r])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u64; N_CLASSES];
        for i in 0..sorted.len() - 1 {
            left[sorted[i].1] += 1;
            if sorted[i].0 < sorted[i + 1].0 {
                let nl = (i + 1) as f64;
                let nr = total - nl;
                let mut right = totals;
                for (r, l) in right.iter_mut().zip(&left) {
                    *r -= l;
                }
                let score = (nl * criterion.impurity(&left, nl)
                    + nr * criterion.impurity(&right, nr))
                    / total;
                if score < best_score {
                    let mut threshold = (sorted[i].0 + sorted[i + 1].0) / 2.0;
                    if threshold <= sorted[i].0 {
                        // Midpoint rounded down onto the lower value
                        // (adjacent floats); use the upper value instead so
                        // both sides stay non-empty.
                        threshold = sorted[i + 1].0;
                    }
                    best_score = score;
                    best = Some((feature, threshold));
                }
            }
        }
    }
    best
}
