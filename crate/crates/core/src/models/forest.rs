//! Random forest classifier.
//!
//! Each tree trains on a bootstrap sample (n draws with replacement) with
//! its own generator seeded per tree index, so training is deterministic
//! under any thread count. Prediction is majority vote over tree votes,
//! ties toward the lowest class code.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Rng, derive};
use crate::table::{ClassLabel, N_CLASSES};

use super::tree::{DecisionTree, SplitCriterion, TreeConfig, grow};
use super::{Design, argmax_class};

/// How many candidate features each node considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `floor(sqrt(n_features))`, the canonical forest default.
    Sqrt,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestParams {
    pub n_trees: usize,
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<usize>,
    pub criterion: SplitCriterion,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            criterion: SplitCriterion::Gini,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub params: RandomForestParams,
    pub n_features: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

pub fn train(
    design: Design<'_>,
    labels: &[ClassLabel],
    params: &RandomForestParams,
) -> Result<RandomForestModel> {
    if design.n_rows() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
    }
    let codes: Vec<usize> = labels.iter().map(|l| l.code()).collect();
    let features_per_node = match params.max_features {
        MaxFeatures::Sqrt => Some(((design.n_features() as f64).sqrt().floor() as usize).max(1)),
        MaxFeatures::All => None,
    };
    let cfg = TreeConfig {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split.max(2),
        criterion: params.criterion,
        features_per_node,
    };
    let n = design.n_rows();
    let trees: Vec<DecisionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = Rng::new(derive(params.seed, t as u64));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
            grow(design, &codes, bootstrap, &cfg, &mut rng)
        })
        .collect();
    Ok(RandomForestModel {
        params: params.clone(),
        n_features: design.n_features(),
        trees,
    })
}

/// Predicted labels plus per-class tree-vote fractions.
pub fn predict(
    model: &RandomForestModel,
    design: Design<'_>,
) -> Result<(Vec<ClassLabel>, Vec<[f64; N_CLASSES]>)> {
    if design.n_features() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            got: design.n_features(),
        });
    }
    let results: Vec<(ClassLabel, [f64; N_CLASSES])> = (0..design.n_rows())
        .into_par_iter()
        .map(|r| {
            let row = design.row(r);
            let mut votes = [0u64; N_CLASSES];
            for tree in &model.trees {
                votes[tree.vote(row)] += 1;
            }
            let label = argmax_class(&votes);
            let total = model.trees.len() as f64;
            let fractions = [
                votes[0] as f64 / total,
                votes[1] as f64 / total,
                votes[2] as f64 / total,
            ];
            (label, fractions)
        })
        .collect();
    Ok(results.into_iter().unzip())
}
