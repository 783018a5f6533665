//! k-nearest-neighbour classifier (brute-force Euclidean scan).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{ClassLabel, N_CLASSES};

use super::{Design, argmax_class};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

/// Stored training set; k-NN has no training phase beyond memorising it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_features: usize,
    values: Vec<f64>,
    labels: Vec<ClassLabel>,
}

pub fn fit(design: Design<'_>, labels: &[ClassLabel], params: &KnnParams) -> Result<KnnModel> {
    if design.n_rows() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if params.k == 0 || params.k > design.n_rows() {
        return Err(Error::KExceedsTrainingSize {
            k: params.k,
            size: design.n_rows(),
        });
    }
    let mut values = Vec::with_capacity(design.n_rows() * design.n_features());
    for r in 0..design.n_rows() {
        values.extend_from_slice(design.row(r));
    }
    Ok(KnnModel {
        k: params.k,
        n_features: design.n_features(),
        values,
        labels: labels.to_vec(),
    })
}

/// Majority label among the k nearest training rows per query. Distance
/// ties prefer the lower training index; label ties the lower class code.
/// Scores are neighbour-vote fractions.
pub fn predict(
    model: &KnnModel,
    queries: Design<'_>,
) -> Result<(Vec<ClassLabel>, Vec<[f64; N_CLASSES]>)> {
    if queries.n_features() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            got: queries.n_features(),
        });
    }
    let train = Design::new(&model.values, model.labels.len(), model.n_features);
    let results: Vec<(ClassLabel, [f64; N_CLASSES])> = (0..queries.n_rows())
        .into_par_iter()
        .map(|q| {
            let query = queries.row(q);
            let mut dists: Vec<(f64, usize)> = (0..train.n_rows())
                .map(|t| {
                    let d2: f64 = query
                        .iter()
                        .zip(train.row(t))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d2, t)
                })
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = [0u64; N_CLASSES];
            for &(_, idx) in &dists[..model.k] {
                votes[model.labels[idx].code()] += 1;
            }
            let label = argmax_class(&votes);
            let total = model.k as f64;
            (
                label,
                [
                    votes[0] as f64 / total,
                    votes[1] as f64 / total,
                    votes[2] as f64 / total,
                ],
            )
        })
        .collect();
    Ok(results.into_iter().unzip())
}
