//! Two-component PCA for outlier visualisation.
//!
//! Components are the top-2 eigenvectors of the population covariance
//! matrix, found by cyclic Jacobi rotation. The sign convention (largest
//! magnitude coordinate positive) keeps reports byte-stable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::MeasurementTable;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub means: Vec<f64>,
    /// Two orthonormal direction vectors of length `n_features`.
    pub components: [Vec<f64>; 2],
    /// Covariance eigenvalues of the two components, descending.
    pub explained_variance: [f64; 2],
}

/// Fit a 2-component PCA on mean-centred data.
#[allow(clippy::needless_range_loop)] // indexed matrix kernels read better
pub fn pca_fit(table: &MeasurementTable) -> Result<PcaModel> {
    let n = table.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows {
            rows: n,
            required: 2,
        });
    }
    let d = table.n_features();
    let mut means = vec![0.0; d];
    for r in 0..n {
        for (m, v) in means.iter_mut().zip(table.row(r)) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }

    // Population covariance, d×d symmetric.
    let mut cov = vec![vec![0.0; d]; d];
    for r in 0..n {
        let row = table.row(r);
        for i in 0..d {
            let di = row[i] - means[i];
            for j in i..d {
                cov[i][j] += di * (row[j] - means[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n as f64;
            cov[j][i] = cov[i][j];
        }
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]).then(a.cmp(&b)));

    let mut components: [Vec<f64>; 2] = [vec![0.0; d], vec![0.0; d]];
    let mut explained_variance = [0.0; 2];
    for (slot, &col) in order.iter().take(2).enumerate() {
        let mut v: Vec<f64> = (0..d).map(|row| eigenvectors[row][col]).collect();
        // Sign convention: largest-magnitude coordinate is positive.
        let lead = (0..d)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .unwrap_or(0);
        if v[lead] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        components[slot] = v;
        explained_variance[slot] = eigenvalues[col].max(0.0);
    }
    // A 1-feature table has only one eigenpair; the second component stays
    // zero with zero variance.
    Ok(PcaModel {
        means,
        components,
        explained_variance,
    })
}

/// Project rows onto the two components: `(centered row) · component`.
pub fn pca_project(model: &PcaModel, table: &MeasurementTable) -> Result<Vec<(f64, f64)>> {
    if table.n_features() != model.means.len() {
        return Err(Error::DimensionMismatch {
            expected: model.means.len(),
            got: table.n_features(),
        });
    }
    Ok((0..table.n_rows())
        .map(|r| {
            let row = table.row(r);
            let mut pc = [0.0; 2];
            for (slot, component) in model.components.iter().enumerate() {
                pc[slot] = row
                    .iter()
                    .zip(&model.means)
                    .zip(component)
                    .map(|((v, m), c)| (v - m) * c)
                    .sum();
            }
            (pc[0], pc[1])
        })
        .collect())
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors); eigenvector `i` is column `i`.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if d < 2 {
        return (a.iter().enumerate().map(|(i, row)| row[i]).collect(), v);
    }

    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|x| x * x))
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..d - 1 {
            for q in p + 1..d {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| a[i][i]).collect(), v)
}
