//! Feature scoring: per-feature histograms, feature–target correlation,
//! mutual information and top-k selection.
//!
//! Scores are computed per feature independently (parallelised) and
//! assembled in feature-index order, so output never depends on scheduling.

mod pca;

pub use pca::{PcaModel, pca_fit, pca_project};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{MeasurementTable, N_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    /// Absolute Pearson correlation against the integer class code.
    PearsonAbs,
    /// Histogram mutual information with the class label, in nats.
    MutualInformation,
}

impl ScoreMethod {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMethod::PearsonAbs => "pearson_abs",
            ScoreMethod::MutualInformation => "mutual_information",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: String,
    /// Column index in the scored table.
    pub index: usize,
    pub score: f64,
}

/// Per-feature scores sorted descending, ties broken by feature index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureScoreList {
    pub method: ScoreMethod,
    pub entries: Vec<FeatureScore>,
}

impl FeatureScoreList {
    fn from_scores(method: ScoreMethod, table: &MeasurementTable, scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let entries = order
            .into_iter()
            .map(|index| FeatureScore {
                feature: table.feature_names()[index].clone(),
                index,
                score: scores[index],
            })
            .collect();
        Self { method, entries }
    }

    /// Names of the top `k` features; deterministic under ties.
    pub fn select_top_k(&self, k: usize) -> Result<Vec<String>> {
        if k == 0 || k > self.entries.len() {
            return Err(Error::KOutOfRange {
                k,
                max: self.entries.len(),
            });
        }
        Ok(self.entries[..k]
            .iter()
            .map(|e| e.feature.clone())
            .collect())
    }
}

/// One equal-width histogram bin; the maximum value lands in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Equal-width histogram of one feature over `[min, max]`. A constant
/// feature collapses to a single occupied bin.
pub fn histogram(
    table: &MeasurementTable,
    feature: &str,
    n_bins: usize,
) -> Result<Vec<HistogramBin>> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    let col = table
        .feature_index(feature)
        .ok_or_else(|| Error::UnknownFeature {
            name: feature.to_string(),
        })?;
    let values: Vec<f64> = (0..table.n_rows()).map(|r| table.value(r, col)).collect();
    if values.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(vec![HistogramBin {
            low: min,
            high: max,
            count: values.len(),
        }]);
    }
    let width = (max - min) / n_bins as f64;
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            low: min + i as f64 * width,
            high: if i + 1 == n_bins {
                max
            } else {
                min + (i + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for v in values {
        let idx = (((v - min) / width) as usize).min(n_bins - 1);
        bins[idx].count += 1;
    }
    Ok(bins)
}

/// Rank features by `|Pearson r|` against the integer class code.
/// Zero-variance features score 0.
pub fn correlation_ranking(table: &MeasurementTable) -> Result<FeatureScoreList> {
    if table.n_rows() < 2 {
        return Err(Error::TooFewRows {
            rows: table.n_rows(),
            required: 2,
        });
    }
    let y: Vec<f64> = table.labels().iter().map(|l| l.code() as f64).collect();
    let n = y.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let y_var: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();

    let scores: Vec<f64> = (0..table.n_features())
        .into_par_iter()
        .map(|c| {
            let x_mean = (0..table.n_rows()).map(|r| table.value(r, c)).sum::<f64>() / n;
            let mut xy = 0.0;
            let mut xx = 0.0;
            for (r, y_r) in y.iter().enumerate() {
                let dx = table.value(r, c) - x_mean;
                xy += dx * (y_r - y_mean);
                xx += dx * dx;
            }
            if xx == 0.0 || y_var == 0.0 {
                0.0
            } else {
                (xy / (xx * y_var).sqrt()).abs().min(1.0)
            }
        })
        .collect();
    Ok(FeatureScoreList::from_scores(
        ScoreMethod::PearsonAbs,
        table,
        scores,
    ))
}

/// Rank features by mutual information with the class label, in nats.
/// Each feature is discretised into `n_bins` equal-width bins;
/// `MI(X;Y) = Σ p(x,y)·ln(p(x,y) / (p(x)·p(y)))` over the joint histogram.
pub fn mutual_information(table: &MeasurementTable, n_bins: usize) -> Result<FeatureScoreList> {
    if table.n_rows() < 2 {
        return Err(Error::TooFewRows {
            rows: table.n_rows(),
            required: 2,
        });
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be at least 1".into()));
    }
    let class_codes: Vec<usize> = table.labels().iter().map(|l| l.code()).collect();
    let scores: Vec<f64> = (0..table.n_features())
        .into_par_iter()
        .map(|c| {
            let values: Vec<f64> = (0..table.n_rows()).map(|r| table.value(r, c)).collect();
            mi_feature(&values, &class_codes, n_bins)
        })
        .collect();
    Ok(FeatureScoreList::from_scores(
        ScoreMethod::MutualInformation,
        table,
        scores,
    ))
}

fn mi_feature(values: &[f64], class_codes: &[usize], n_bins: usize) -> f64 {
    let n = values.len();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut joint = vec![[0u64; N_CLASSES]; n_bins];
    if min == max {
        for &y in class_codes {
            joint[0][y] += 1;
        }
    } else {
        let width = (max - min) / n_bins as f64;
        for (&v, &y) in values.iter().zip(class_codes) {
            let bin = (((v - min) / width) as usize).min(n_bins - 1);
            joint[bin][y] += 1;
        }
    }

    let mut bin_totals = vec![0u64; n_bins];
    let mut class_totals = [0u64; N_CLASSES];
    for (bin, row) in joint.iter().enumerate() {
        for (class, &count) in row.iter().enumerate() {
            bin_totals[bin] += count;
            class_totals[class] += count;
        }
    }

    let nf = n as f64;
    let mut mi = 0.0;
    for (bin, row) in joint.iter().enumerate() {
        for (class, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint_p = count as f64 / nf;
                mi += joint_p
                    * ((count as f64 * nf) / (bin_totals[bin] as f64 * class_totals[class] as f64))
                        .ln();
            }
        }
    }
    mi.max(0.0)
}
