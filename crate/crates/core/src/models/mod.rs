//! The three classifiers compared by the pipeline — random forest,
//! k-nearest neighbours and multinomial softmax regression — behind one
//! train/predict contract, plus the serialisable trained-model artifact.

pub mod forest;
pub mod knn;
pub mod softmax;
mod tree;

pub use forest::{MaxFeatures, RandomForestModel, RandomForestParams};
pub use knn::{KnnModel, KnnParams};
pub use softmax::{SoftmaxFitInfo, SoftmaxModel, SoftmaxParams};
pub use tree::SplitCriterion;

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::StandardScaler;
use crate::table::{ClassLabel, MeasurementTable, N_CLASSES};

/// Artifact schema version written by [`TrainedModel::save`].
pub const ARTIFACT_VERSION: u32 = 1;

/// Borrowed design matrix: row-major values, `n_rows × n_features`.
#[derive(Debug, Clone, Copy)]
pub struct Design<'a> {
    values: &'a [f64],
    n_rows: usize,
    n_features: usize,
}

impl<'a> Design<'a> {
    pub fn new(values: &'a [f64], n_rows: usize, n_features: usize) -> Self {
        debug_assert_eq!(values.len(), n_rows * n_features);
        Self {
            values,
            n_rows,
            n_features,
        }
    }

    pub fn from_table(table: &'a MeasurementTable) -> Self {
        Self::new(table.values(), table.n_rows(), table.n_features())
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn row(&self, r: usize) -> &'a [f64] {
        &self.values[r * self.n_features..(r + 1) * self.n_features]
    }
}

/// Argmax with ties resolved toward the lowest class code.
pub(crate) fn argmax_class<T: PartialOrd + Copy>(scores: &[T; N_CLASSES]) -> ClassLabel {
    let mut best = 0;
    for c in 1..N_CLASSES {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    ClassLabel::from_code(best).expect("code < N_CLASSES")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelVariant {
    RandomForest(RandomForestModel),
    Knn(KnnModel),
    Softmax(SoftmaxModel),
}

impl ModelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::RandomForest(_) => "random_forest",
            ModelVariant::Knn(_) => "knn",
            ModelVariant::Softmax(_) => "softmax",
        }
    }
}

/// Provenance fields embedded in every artifact.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub config_hash: String,
    pub seed: u64,
}

/// A fitted classifier plus everything needed to score new CSVs: the
/// feature subset it was trained on and the scaler fitted at training time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub meta: ArtifactMeta,
    pub feature_subset: Vec<String>,
    pub scaler: StandardScaler,
    pub variant: ModelVariant,
}

impl TrainedModel {
    /// Predict labels and per-class scores (vote fractions or
    /// probabilities) for a table that contains at least the model's
    /// feature subset. The embedded scaler is applied first.
    pub fn predict(
        &self,
        table: &MeasurementTable,
    ) -> Result<(Vec<ClassLabel>, Vec<[f64; N_CLASSES]>)> {
        let selected = table.select_features(&self.feature_subset)?;
        let scaled = self.scaler.apply(&selected)?;
        let design = Design::from_table(&scaled);
        match &self.variant {
            ModelVariant::RandomForest(model) => forest::predict(model, design),
            ModelVariant::Knn(model) => knn::predict(model, design),
            ModelVariant::Softmax(model) => softmax::predict(model, design),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        serde_json::to_writer_pretty(file, self).map_err(|e| Error::Config {
            path: path.into(),
            message: e.to_string(),
        })
    }

    /// Load an artifact, rejecting unknown schema versions before
    /// attempting to decode the body.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        let value: serde_json::Value =
            serde_json::from_reader(file).map_err(|e| Error::Config {
                path: path.into(),
                message: e.to_string(),
            })?;
        match value.get("version") {
            Some(v) if v.as_u64() == Some(ARTIFACT_VERSION as u64) => {}
            other => {
                return Err(Error::ArtifactVersion {
                    found: other.map_or_else(|| "missing".to_string(), |v| v.to_string()),
                    expected: ARTIFACT_VERSION,
                });
            }
        }
        serde_json::from_value(value).map_err(|e| Error::Config {
            path: path.into(),
            message: e.to_string(),
        })
    }
}
