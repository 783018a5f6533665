//! Preprocessing chain: non-finite removal, isolation-forest outlier
//! filtering, standard scaling and SMOTE class balancing.
//!
//! The pipeline order is fixed: `drop_nonfinite` → outlier removal →
//! scaling → SMOTE. Scaling and SMOTE are fit on training folds only when
//! evaluation runs in leakage-safe mode; see [`crate::eval`].

mod iforest;
mod scaler;
mod smote;

pub use iforest::{
    IsolationForest, IsolationForestParams, anomaly_score, average_path_length, remove_outliers,
};
pub use scaler::StandardScaler;
pub use smote::{SmoteParams, SmoteRecord, smote};

use crate::error::{Error, Result};
use crate::table::MeasurementTable;

/// Remove every row containing at least one non-finite value. Surviving rows
/// are untouched; the count of removed rows is reported.
pub fn drop_nonfinite(table: &MeasurementTable) -> Result<(MeasurementTable, usize)> {
    let keep: Vec<usize> = (0..table.n_rows())
        .filter(|&r| table.row(r).iter().all(|v| v.is_finite()))
        .collect();
    let removed = table.n_rows() - keep.len();
    if table.n_rows() > 0 && keep.is_empty() {
        return Err(Error::AllRowsRemoved);
    }
    Ok((table.subset_rows(&keep), removed))
}
