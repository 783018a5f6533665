//! One module per subcommand.

pub mod analyze;
pub mod evaluate;
pub mod ingest;
pub mod predict;
pub mod preprocess;
pub mod synth;
pub mod tune;

/// Stage tags for deriving per-stage seeds from the run seed.
pub(crate) mod stream {
    pub const SAMPLE: u64 = 10;
    pub const IFOREST: u64 = 11;
    pub const FINAL_MODEL: u64 = 12;
    pub const FINAL_SMOTE: u64 = 13;
}

/// Artifact file names under the output directory.
pub(crate) mod files {
    pub const SAMPLE: &str = "sample.csv";
    pub const SAMPLE_META: &str = "sample_meta.json";
    pub const CLEANED: &str = "cleaned.csv";
    pub const PREPROCESS_AUDIT: &str = "preprocess_audit.json";
    pub const OUTLIERS: &str = "outliers.csv";
    pub const PCA_PROJECTION: &str = "pca_projection.csv";
    pub const FEATURE_SCORES: &str = "feature_scores.csv";
    pub const HISTOGRAMS: &str = "histograms.csv";
    pub const EVAL_REPORT: &str = "eval_report.json";
    pub const METRICS_BY_MODEL: &str = "metrics_by_model.csv";
    pub const CONFUSION_MATRIX: &str = "confusion_matrix.csv";
    pub const MODEL: &str = "model.json";
    pub const BEST_PARAMS: &str = "best_params.json";
    pub const TUNING_TRACE: &str = "tuning_trace.csv";
}
