//! Run configuration.
//!
//! One JSON file fully determines a run: two runs with equal configs and
//! inputs produce byte-identical reports. Unknown keys are rejected at
//! every level so typos cannot silently change behaviour.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyze::ScoreMethod;
use crate::error::{Error, Result};
use crate::eval::{LeakageMode, ModelSpec, SmoteSettings, TuneGrid};
use crate::models::{KnnParams, MaxFeatures, RandomForestParams, SoftmaxParams, SplitCriterion};
use crate::table::ClassLabel;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: DataConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub models: ModelsConfig,
    #[serde(default)]
    pub tuning: TuneGrid,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Explicit list of input CSVs, in order.
    #[serde(default)]
    pub files: Vec<PathBuf>,
    /// Alternatively, a directory whose `*.csv` files are taken in name order.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Scenario-code map for datasets with numeric markers.
    #[serde(default)]
    pub scenario_map: Option<PathBuf>,
}

impl DataConfig {
    /// Resolve the configured inputs to an ordered file list.
    pub fn resolve_inputs(&self) -> Result<Vec<PathBuf>> {
        if !self.files.is_empty() {
            return Ok(self.files.clone());
        }
        let Some(dir) = &self.dir else {
            return Err(Error::InvalidParameter(
                "config needs data.files or data.dir".into(),
            ));
        };
        let entries = fs::read_dir(dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"))
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no .csv files under {}",
                dir.display()
            )));
        }
        Ok(files)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub fraction: f64,
    pub stratified: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            fraction: 0.02,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IforestConfig {
    pub n_trees: usize,
    /// `None` uses `min(256, n_rows)`.
    pub subsample_size: Option<usize>,
}

impl Default for IforestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            subsample_size: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoteConfig {
    pub enabled: bool,
    pub k_neighbors: usize,
    /// Restrict augmentation to these classes; `None` tops up every class
    /// below the majority count.
    #[serde(default)]
    pub classes: Option<Vec<ClassLabel>>,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            k_neighbors: 5,
            classes: None,
        }
    }
}

impl SmoteConfig {
    pub fn settings(&self) -> Option<SmoteSettings> {
        self.enabled.then(|| SmoteSettings {
            k_neighbors: self.k_neighbors,
            classes: self.classes.clone(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    #[serde(default)]
    pub iforest: IforestConfig,
    pub contamination: f64,
    #[serde(default)]
    pub smote: SmoteConfig,
    /// Run SMOTE in raw feature space before the scaler (the narrative
    /// order of some pipelines); default is scale-then-SMOTE so neighbour
    /// distances are computed in scaled space.
    pub smote_before_scaling: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            iforest: IforestConfig::default(),
            contamination: 0.05,
            smote: SmoteConfig::default(),
            smote_before_scaling: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    /// Evaluate models on the top-k subset as well as the full set.
    pub selection_enabled: bool,
    pub method: ScoreMethod,
    pub top_k: usize,
    pub mi_bins: usize,
    /// How many leading correlation entries the score report flags.
    pub correlation_top_k: usize,
    /// Features to emit histogram data for (plot-ready distributions).
    #[serde(default)]
    pub histogram_features: Vec<String>,
    pub histogram_bins: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            selection_enabled: true,
            method: ScoreMethod::MutualInformation,
            top_k: 40,
            mi_bins: 20,
            correlation_top_k: 14,
            histogram_features: Vec::new(),
            histogram_bins: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub criterion: SplitCriterion,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
}

impl Default for RandomForestConfig {
    fn default() -> Self {
        let p = RandomForestParams::default();
        Self {
            n_trees: p.n_trees,
            max_depth: p.max_depth,
            criterion: p.criterion,
            max_features: p.max_features,
            min_samples_split: p.min_samples_split,
        }
    }
}

impl RandomForestConfig {
    pub fn params(&self) -> RandomForestParams {
        RandomForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            criterion: self.criterion,
            max_features: self.max_features,
            min_samples_split: self.min_samples_split,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoftmaxConfig {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for SoftmaxConfig {
    fn default() -> Self {
        let p = SoftmaxParams::default();
        Self {
            learning_rate: p.learning_rate,
            l2_penalty: p.l2_penalty,
            max_iters: p.max_iters,
            tolerance: p.tolerance,
        }
    }
}

impl SoftmaxConfig {
    pub fn params(&self) -> SoftmaxParams {
        SoftmaxParams {
            learning_rate: self.learning_rate,
            l2_penalty: self.l2_penalty,
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsConfig {
    /// Which models to evaluate, in report order.
    pub include: Vec<String>,
    #[serde(default)]
    pub random_forest: RandomForestConfig,
    #[serde(default)]
    pub knn: KnnParams,
    #[serde(default)]
    pub softmax: SoftmaxConfig,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        Self {
            include: vec!["random_forest".into(), "knn".into(), "softmax".into()],
            random_forest: RandomForestConfig::default(),
            knn: KnnParams::default(),
            softmax: SoftmaxConfig::default(),
        }
    }
}

impl ModelsConfig {
    /// Materialise the configured model specs, in `include` order.
    pub fn specs(&self) -> Result<Vec<ModelSpec>> {
        self.include
            .iter()
            .map(|name| match name.as_str() {
                "random_forest" => Ok(ModelSpec::RandomForest(self.random_forest.params())),
                "knn" => Ok(ModelSpec::Knn(self.knn)),
                "softmax" => Ok(ModelSpec::Softmax(self.softmax.params())),
                other => Err(Error::InvalidParameter(format!(
                    "unknown model {other:?} in models.include"
                ))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub n_folds: usize,
    pub leakage: LeakageMode,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            n_folds: 10,
            leakage: LeakageMode::Safe,
        }
    }
}

impl PipelineConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config {
            path: path.into(),
            message: e.to_string(),
        })
    }

    /// Stable 64-bit hash of the canonical config serialisation; stamped
    /// into every output file so artifacts can be traced to their run.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let json = r#"{
            "data": { "files": ["a.csv"] },
            "output_dir": "out"
        }"#;
        let config: PipelineConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.sample.fraction, 0.02);
        assert!(config.sample.stratified);
        assert_eq!(config.preprocess.contamination, 0.05);
        assert_eq!(config.features.top_k, 40);
        assert_eq!(config.evaluation.n_folds, 10);
        assert_eq!(config.evaluation.leakage, LeakageMode::Safe);
        assert_eq!(config.models.specs().unwrap().len(), 3);
        assert_eq!(config.tuning.n_trees, vec![50, 100, 200]);
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        let top = r#"{ "data": { "files": [] }, "output_dir": "o", "bogus": 1 }"#;
        assert!(serde_json::from_str::<PipelineConfig>(top).is_err());

        let nested = r#"{
            "data": { "files": [], "surprise": true },
            "output_dir": "o"
        }"#;
        assert!(serde_json::from_str::<PipelineConfig>(nested).is_err());

        let model_level = r#"{
            "data": { "files": [] },
            "output_dir": "o",
            "models": { "include": ["knn"], "knn": { "k": 5, "metric": "cosine" } }
        }"#;
        assert!(serde_json::from_str::<PipelineConfig>(model_level).is_err());
    }

    #[test]
    fn leakage_mode_spelling() {
        let json = r#"{
            "data": { "files": [] },
            "output_dir": "o",
            "evaluation": { "n_folds": 10, "leakage": "paper-literal" }
        }"#;
        let config: PipelineConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.evaluation.leakage, LeakageMode::PaperLiteral);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let json = r#"{ "data": { "files": ["a.csv"] }, "output_dir": "out" }"#;
        let a: PipelineConfig = serde_json::from_str(json).unwrap();
        let b: PipelineConfig = serde_json::from_str(json).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let mut c: PipelineConfig = serde_json::from_str(json).unwrap();
        c.seed = 43;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn unknown_model_name_is_rejected() {
        let json = r#"{
            "data": { "files": [] },
            "output_dir": "o",
            "models": { "include": ["svm"] }
        }"#;
        let config: PipelineConfig = serde_json::from_str(json).unwrap();
        assert!(config.models.specs().is_err());
    }

    #[test]
    fn tuning_grid_accepts_null_depth() {
        let json = r#"{
            "data": { "files": [] },
            "output_dir": "o",
            "tuning": { "n_trees": [10], "max_depth": [4, null], "criterion": ["gini", "entropy"] }
        }"#;
        let config: PipelineConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.tuning.max_depth, vec![Some(4), None]);
    }
}
