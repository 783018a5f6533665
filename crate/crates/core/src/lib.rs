//! Classification pipeline for PMU power-system disturbance records.
//!
//! The crate covers the full workflow for sorting measurement rows into
//! `{Attack, Natural, NoEvent}`: loading and merging the raw CSV captures,
//! stratified sampling, preprocessing (non-finite removal, isolation-forest
//! outlier filtering, standard scaling, SMOTE class balancing), feature
//! scoring (absolute Pearson correlation and mutual information, plus PCA
//! projections for outlier visualisation), three classifiers (random forest,
//! k-nearest neighbours, softmax regression) and stratified k-fold evaluation
//! with grid-search tuning.
//!
//! Every stochastic step draws from seeds recorded in [`PipelineConfig`], so
//! two runs with the same configuration and inputs produce byte-identical
//! reports regardless of thread count.

pub mod analyze;
pub mod config;
pub mod error;
pub mod eval;
pub mod models;
pub mod preprocess;
pub mod report;
pub mod rng;
pub mod synth;
pub mod table;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, EvalReport, FoldPlan, LeakageMode, MetricSet, ModelSpec};
pub use models::TrainedModel;
pub use preprocess::{IsolationForest, SmoteParams, StandardScaler};
pub use table::{ClassLabel, MeasurementTable, SampleSpec};
