//! Per-feature standardisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::MeasurementTable;

/// Maps each value to `(x − mean) / std` using the population standard
/// deviation (divide by `n`). Zero-variance features map to 0 so all
/// columns stay aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl StandardScaler {
    pub fn fit(table: &MeasurementTable) -> Result<Self> {
        if table.n_rows() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let n = table.n_rows() as f64;
        let d = table.n_features();
        let mut means = vec![0.0; d];
        for r in 0..table.n_rows() {
            for (m, v) in means.iter_mut().zip(table.row(r)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; d];
        for r in 0..table.n_rows() {
            for ((s, m), v) in stds.iter_mut().zip(&means).zip(table.row(r)) {
                let centered = v - m;
                *s += centered * centered;
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
        }
        Ok(Self { means, stds })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect())
    }

    pub fn apply(&self, table: &MeasurementTable) -> Result<MeasurementTable> {
        if table.n_features() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: table.n_features(),
            });
        }
        let mut values = Vec::with_capacity(table.n_rows() * table.n_features());
        for r in 0..table.n_rows() {
            values.extend(self.apply_row(table.row(r))?);
        }
        MeasurementTable::new(
            table.feature_names().to_vec(),
            values,
            table.labels().to_vec(),
            table.provenance().to_vec(),
        )
    }
}
