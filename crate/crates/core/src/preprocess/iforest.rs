//! Isolation forest outlier detection.
//!
//! Trees isolate rows by recursive uniform-random (feature, split-point)
//! choices; anomalous rows isolate in short paths. The anomaly score is
//! `s(x, ψ) = 2^(−E[h(x)] / c(ψ))` where `c(n) = 2·H(n−1) − 2(n−1)/n`
//! estimates the average path length of an unsuccessful BST search and
//! `H(i) ≈ ln(i) + γ`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{Rng, derive};
use crate::table::MeasurementTable;

const EULER_MASCHERONI: f64 = 0.5772156649;

/// Average path length `c(n)` of unsuccessful search in a BST of `n` points.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let nf = n as f64;
    2.0 * ((nf - 1.0).ln() + EULER_MASCHERONI) - 2.0 * (nf - 1.0) / nf
}

/// Anomaly score for a mean path length under subsample size `ψ`.
/// A row whose mean path equals `c(ψ)` scores exactly 0.5.
pub fn anomaly_score(mean_path: f64, subsample_size: usize) -> f64 {
    2f64.powf(-mean_path / average_path_length(subsample_size))
}

#[derive(Debug, Clone)]
pub struct IsolationForestParams {
    pub n_trees: usize,
    pub subsample_size: usize,
    pub seed: u64,
}

impl Default for IsolationForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            subsample_size: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
    root: usize,
}

impl Tree {
    /// Path length of `row`: edges walked plus `c(size)` at the leaf.
    fn path_length(&self, row: &[f64]) -> f64 {
        let mut node = self.root;
        let mut depth = 0_usize;
        loop {
            match self.nodes[node] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[feature] < threshold {
                        left
                    } else {
                        right
                    };
                    depth += 1;
                }
                Node::Leaf { size } => {
                    return depth as f64 + average_path_length(size);
                }
            }
        }
    }

    fn max_depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize, depth: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => depth,
                Node::Split { left, right, .. } => {
                    walk(nodes, left, depth + 1).max(walk(nodes, right, depth + 1))
                }
            }
        }
        walk(&self.nodes, self.root, 0)
    }
}

#[derive(Debug, Clone)]
pub struct IsolationForest {
    trees: Vec<Tree>,
    n_features: usize,
    subsample_size: usize,
}

impl IsolationForest {
    /// Fit a forest. Each tree grows on an independent seeded subsample
    /// (without replacement) until isolation or the depth limit
    /// `ceil(log2(ψ))`.
    pub fn fit(table: &MeasurementTable, params: &IsolationForestParams) -> Result<Self> {
        if params.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        let n = table.n_rows();
        if n < 2 || params.subsample_size < 2 || params.subsample_size > n {
            return Err(Error::TooFewRows {
                rows: n,
                required: params.subsample_size.max(2),
            });
        }
        let psi = params.subsample_size;
        let depth_limit = ceil_log2(psi);
        let trees: Vec<Tree> = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = Rng::new(derive(params.seed, t as u64));
                let sample = rng.sample_indices(n, psi);
                grow_tree(table, sample, depth_limit, &mut rng)
            })
            .collect();
        Ok(Self {
            trees,
            n_features: table.n_features(),
            subsample_size: psi,
        })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn subsample_size(&self) -> usize {
        self.subsample_size
    }

    /// Deepest path over all trees; bounded by `ceil(log2(ψ))`.
    pub fn max_tree_depth(&self) -> usize {
        self.trees.iter().map(Tree::max_depth).max().unwrap_or(0)
    }

    /// Anomaly score in `(0, 1)`; higher is more anomalous.
    pub fn score(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let total: f64 = self.trees.iter().map(|t| t.path_length(row)).sum();
        Ok(anomaly_score(
            total / self.trees.len() as f64,
            self.subsample_size,
        ))
    }

    /// Score every row of a table.
    pub fn score_table(&self, table: &MeasurementTable) -> Result<Vec<f64>> {
        if table.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: table.n_features(),
            });
        }
        Ok((0..table.n_rows())
            .into_par_iter()
            .map(|r| {
                self.score(table.row(r))
                    .expect("dimensions already checked")
            })
            .collect())
    }
}

fn ceil_log2(n: usize) -> usize {
    debug_assert!(n >= 2);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

fn grow_tree(
    table: &MeasurementTable,
    rows: Vec<usize>,
    depth_limit: usize,
    rng: &mut Rng,
) -> Tree {
    let mut nodes = Vec::new();
    let root = grow_node(table, rows, 0, depth_limit, rng, &mut nodes);
    Tree { nodes, root }
}

fn grow_node(
    table: &MeasurementTable,
    rows: Vec<usize>,
    depth: usize,
    depth_limit: usize,
    rng: &mut Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    if rows.len() <= 1 || depth >= depth_limit {
        nodes.push(Node::Leaf { size: rows.len() });
        return nodes.len() - 1;
    }

    // Only features that actually vary on this subset can split it.
    let mut candidates = Vec::new();
    let mut bounds = Vec::new();
    for f in 0..table.n_features() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &r in &rows {
            let v = table.value(r, f);
            min = min.min(v);
            max = max.max(v);
        }
        if min < max {
            candidates.push(f);
            bounds.push((min, max));
        }
    }
    if candidates.is_empty() {
        nodes.push(Node::Leaf { size: rows.len() });
        return nodes.len() - 1;
    }

    let pick = rng.below(candidates.len());
    let feature = candidates[pick];
    let (min, max) = bounds[pick];
    let mut threshold = min + rng.next_f64() * (max - min);
    if !(threshold > min && threshold <= max) {
        // Degenerate draw (rounding); fall back to the upper bound, which
        // still yields two non-empty sides because min < max.
        threshold = max;
    }

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| table.value(r, feature) < threshold);
    debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

    let left = grow_node(table, left_rows, depth + 1, depth_limit, rng, nodes);
    let right = grow_node(table, right_rows, depth + 1, depth_limit, rng, nodes);
    nodes.push(Node::Split {
        feature,
        threshold,
        left,
        right,
    });
    nodes.len() - 1
}

/// Score all rows and remove the `ceil(contamination · n)` highest-scoring
/// ones; ties break toward the lower row index. Returns the surviving table
/// (rows unmodified, original order) and the removed indices in ascending
/// order.
pub fn remove_outliers(
    table: &MeasurementTable,
    forest: &IsolationForest,
    contamination: f64,
) -> Result<(MeasurementTable, Vec<usize>)> {
    if !(contamination > 0.0 && contamination < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "contamination {contamination} outside (0, 0.5)"
        )));
    }
    let scores = forest.score_table(table)?;
    let k = (contamination * table.n_rows() as f64).ceil() as usize;

    let mut order: Vec<usize> = (0..table.n_rows()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut removed: Vec<usize> = order[..k].to_vec();
    removed.sort_unstable();
    let survivors: Vec<usize> = (0..table.n_rows())
        .filter(|r| removed.binary_search(r).is_err())
        .collect();
    Ok((table.subset_rows(&survivors), removed))
}
