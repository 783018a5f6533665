//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::table::ClassLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: no data rows")]
    EmptyFile { path: PathBuf },

    #[error(
        "{path}: cannot identify a marker column (need at least one feature column plus a marker)"
    )]
    MissingMarkerColumn { path: PathBuf },

    #[error("{path}: header mismatch at column {column}: expected {expected:?}, found {found:?}")]
    HeaderMismatch {
        path: PathBuf,
        column: usize,
        expected: String,
        found: String,
    },

    #[error("{path}: unrecognised marker value {value:?} (numeric markers need a scenario map)")]
    UnknownMarkerValue { path: PathBuf, value: String },

    #[error("table {index} does not share the schema of table 0")]
    SchemaMismatch { index: usize },

    #[error("sample fraction {fraction} outside (0, 1]")]
    FractionOutOfRange { fraction: f64 },

    #[error("every row contained a non-finite value")]
    AllRowsRemoved,

    #[error("{rows} rows is too few (need at least {required})")]
    TooFewRows { rows: usize, required: usize },

    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("class {class} has {size} members; SMOTE needs more than k={k_neighbors}")]
    ClassTooSmall {
        class: ClassLabel,
        size: usize,
        k_neighbors: usize,
    },

    #[error("unknown feature {name:?}")]
    UnknownFeature { name: String },

    #[error("k={k} outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("k={k} exceeds training size {size}")]
    KExceedsTrainingSize { k: usize, size: usize },

    #[error(
        "loss became non-finite at iteration {iteration} (input may be unscaled or degenerate)"
    )]
    NonFiniteLoss { iteration: usize },

    #[error("class {class} has {count} rows, fewer than {n_folds} folds")]
    ClassSmallerThanFolds {
        class: ClassLabel,
        count: usize,
        n_folds: usize,
    },

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("feature subset is incompatible: {reason}")]
    IncompatibleFeatureSubset { reason: String },

    #[error("hyperparameter grid is empty on the {axis} axis")]
    EmptyGrid { axis: &'static str },

    #[error("model artifact version {found} is not supported (expected {expected})")]
    ArtifactVersion { found: String, expected: u32 },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    InvalidParameter(String),
}
