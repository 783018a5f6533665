//! Audit records shared by the pipeline stages.
//!
//! Every output file carries the run's config hash and seed — JSON files in
//! a `meta` field, CSV files in a leading `#` comment line that the loader
//! skips — so any artifact can be traced back to the exact run.

use serde::{Deserialize, Serialize};

/// Provenance stamped into every artifact.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
}

impl RunMeta {
    /// The `#` comment line used at the top of CSV outputs.
    pub fn csv_comment(&self) -> String {
        format!("config_hash={} seed={}", self.config_hash, self.seed)
    }
}

/// One preprocessing step's audit record: what ran, with which parameters,
/// and how the row count changed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditStep {
    pub step: String,
    pub rows_before: usize,
    pub rows_after: usize,
    pub removed: usize,
    pub added: usize,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessAudit {
    pub meta: RunMeta,
    pub steps: Vec<AuditStep>,
}
