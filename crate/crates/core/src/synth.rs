//! Seeded synthetic dataset generator.
//!
//! Produces tables shaped like the real PMU captures — imbalanced three-way
//! labels, a core of class-informative features buried in noise columns of
//! wildly different magnitudes, optional non-finite cells — so the whole
//! pipeline can be exercised without the real dataset. Used by the test
//! suites, the benchmarks and the `synth` CLI subcommand.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::rng::{Rng, derive};
use crate::table::{ClassLabel, MeasurementTable, N_CLASSES};

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub rows: usize,
    pub features: usize,
    /// Leading features whose class means differ; the rest is noise.
    pub informative: usize,
    /// Distance scale between class centres, in noise standard deviations.
    pub separation: f64,
    /// Relative class weights (normalised internally).
    pub class_weights: [f64; N_CLASSES],
    /// Probability that a row gets one non-finite cell.
    pub nonfinite_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            rows: 900,
            features: 16,
            informative: 6,
            separation: 2.5,
            class_weights: [0.50, 0.18, 0.32],
            nonfinite_fraction: 0.0,
            seed: 7,
        }
    }
}

#[allow(clippy::needless_range_loop)] // feature index drives both centres and magnitudes
pub fn generate(spec: &SynthSpec) -> MeasurementTable {
    let informative = spec.informative.min(spec.features);
    let mut center_rng = Rng::new(derive(spec.seed, 1));
    let centers: Vec<Vec<f64>> = (0..N_CLASSES)
        .map(|_| {
            (0..informative)
                .map(|_| spec.separation * center_rng.next_gaussian())
                .collect()
        })
        .collect();

    let weight_total: f64 = spec.class_weights.iter().sum();
    let mut rng = Rng::new(derive(spec.seed, 2));
    let mut rows = Vec::with_capacity(spec.rows);
    let mut labels = Vec::with_capacity(spec.rows);
    for _ in 0..spec.rows {
        let draw = rng.next_f64() * weight_total;
        let mut acc = 0.0;
        let mut code = N_CLASSES - 1;
        for (c, &w) in spec.class_weights.iter().enumerate() {
            acc += w;
            if draw < acc {
                code = c;
                break;
            }
        }
        let mut row = Vec::with_capacity(spec.features);
        for f in 0..spec.features {
            // Column magnitudes span several decades to exercise scaling.
            let magnitude = 10f64.powi((f % 5) as i32 - 2);
            let value = if f < informative {
                centers[code][f] + rng.next_gaussian()
            } else {
                rng.next_gaussian()
            };
            row.push(value * magnitude);
        }
        if spec.nonfinite_fraction > 0.0 && rng.next_f64() < spec.nonfinite_fraction {
            let col = rng.below(spec.features);
            row[col] = match rng.below(3) {
                0 => f64::INFINITY,
                1 => f64::NEG_INFINITY,
                _ => f64::NAN,
            };
        }
        rows.push(row);
        labels.push(ClassLabel::from_code(code).expect("code < N_CLASSES"));
    }

    let names = (0..spec.features)
        .map(|f| format!("R{}-S{:03}", 1 + f % 4, f))
        .collect();
    MeasurementTable::from_rows(names, rows, labels).expect("generated shape is consistent")
}

/// Generate and write the dataset as `n_files` CSV captures (contiguous
/// row chunks), mirroring the multi-file layout of the real data.
pub fn write_files(spec: &SynthSpec, n_files: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    let table = generate(spec);
    let n_files = n_files.max(1);
    let chunk = table.n_rows().div_ceil(n_files);
    let mut paths = Vec::new();
    for (i, start) in (0..table.n_rows()).step_by(chunk.max(1)).enumerate() {
        let end = (start + chunk).min(table.n_rows());
        let rows: Vec<usize> = (start..end).collect();
        let path = dir.join(format!("capture{:02}.csv", i + 1));
        table.subset_rows(&rows).write_csv(&path)?;
        paths.push(path);
    }
    Ok(paths)
}
