//! Dataset schema, CSV ingestion, merging and stratified sampling.
//!
//! A [`MeasurementTable`] carries the numeric feature matrix, the class
//! label per row and the index of the source file each row came from. All
//! operations are pure: tables are immutable after construction and safe to
//! share across threads.

use std::fmt;
use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Number of target classes.
pub const N_CLASSES: usize = 3;

/// Target class of a measurement row.
///
/// Integer codes are fixed alphabetically and never change between runs:
/// `Attack = 0`, `Natural = 1`, `NoEvent = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Attack,
    Natural,
    NoEvent,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; N_CLASSES] =
        [ClassLabel::Attack, ClassLabel::Natural, ClassLabel::NoEvent];

    /// Fixed integer code (alphabetical order).
    #[inline]
    pub fn code(self) -> usize {
        match self {
            ClassLabel::Attack => 0,
            ClassLabel::Natural => 1,
            ClassLabel::NoEvent => 2,
        }
    }

    pub fn from_code(code: usize) -> Option<ClassLabel> {
        ClassLabel::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Attack => "Attack",
            ClassLabel::Natural => "Natural",
            ClassLabel::NoEvent => "NoEvent",
        }
    }

    /// Parse a textual marker value, case-insensitively after trimming.
    ///
    /// Spacing, underscores and hyphens are ignored, so `"No Event"`,
    /// `"no_event"` and `"NoEvents"` all map to [`ClassLabel::NoEvent`].
    pub fn parse_marker(text: &str) -> Option<ClassLabel> {
        let normalized: String = text
            .trim()
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match normalized.as_str() {
            "attack" => Some(ClassLabel::Attack),
            "natural" => Some(ClassLabel::Natural),
            "noevent" | "noevents" => Some(ClassLabel::NoEvent),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps integer scenario codes to classes, for datasets whose marker column
/// holds scenario numbers instead of class names.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMap {
    pub attack: Vec<i64>,
    pub natural: Vec<i64>,
    pub no_event: Vec<i64>,
}

impl ScenarioMap {
    pub fn classify(&self, code: i64) -> Option<ClassLabel> {
        if self.attack.contains(&code) {
            Some(ClassLabel::Attack)
        } else if self.natural.contains(&code) {
            Some(ClassLabel::Natural)
        } else if self.no_event.contains(&code) {
            Some(ClassLabel::NoEvent)
        } else {
            None
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_reader(file).map_err(|e| Error::Config {
            path: path.into(),
            message: e.to_string(),
        })
    }
}

/// How to draw the working sample from the merged dataset.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleSpec {
    /// Fraction of rows to keep, in `(0, 1]`.
    pub fraction: f64,
    pub seed: u64,
    /// Preserve per-class proportions (within ±1 row per class).
    pub stratified: bool,
}

/// Rows of numeric features plus a class label and source-file provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTable {
    feature_names: Vec<String>,
    /// Row-major, `n_rows × n_features`.
    values: Vec<f64>,
    labels: Vec<ClassLabel>,
    /// Source file index per row.
    provenance: Vec<u32>,
}

impl MeasurementTable {
    pub fn new(
        feature_names: Vec<String>,
        values: Vec<f64>,
        labels: Vec<ClassLabel>,
        provenance: Vec<u32>,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::InvalidParameter(
                "table needs at least one feature".into(),
            ));
        }
        for (i, name) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate feature name {name:?}"
                )));
            }
        }
        if values.len() != labels.len() * feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * feature_names.len(),
                got: values.len(),
            });
        }
        if provenance.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: provenance.len(),
            });
        }
        Ok(Self {
            feature_names,
            values,
            labels,
            provenance,
        })
    }

    /// Build from per-row vectors with provenance 0; convenient in tests.
    pub fn from_rows(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<ClassLabel>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for row in &rows {
            if row.len() != n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        let provenance = vec![0; labels.len()];
        Self::new(feature_names, values, labels, provenance)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.n_features();
        &self.values[r * w..(r + 1) * w]
    }

    #[inline]
    pub fn value(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n_features() + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn provenance(&self) -> &[u32] {
        &self.provenance
    }

    /// Number of distinct source files feeding this table.
    pub fn n_sources(&self) -> u32 {
        self.provenance.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut counts = [0; N_CLASSES];
        for label in &self.labels {
            counts[label.code()] += 1;
        }
        counts
    }

    pub fn rows_of_class(&self, class: ClassLabel) -> Vec<usize> {
        (0..self.n_rows())
            .filter(|&r| self.labels[r] == class)
            .collect()
    }

    /// New table containing the given rows, in the given order.
    pub fn subset_rows(&self, rows: &[usize]) -> Self {
        let w = self.n_features();
        let mut values = Vec::with_capacity(rows.len() * w);
        let mut labels = Vec::with_capacity(rows.len());
        let mut provenance = Vec::with_capacity(rows.len());
        for &r in rows {
            values.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
            provenance.push(self.provenance[r]);
        }
        Self {
            feature_names: self.feature_names.clone(),
            values,
            labels,
            provenance,
        }
    }

    /// New table keeping only the named feature columns, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<Self> {
        let cols: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| Error::IncompatibleFeatureSubset {
                        reason: format!("feature {n:?} not present in the table"),
                    })
            })
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        for r in 0..self.n_rows() {
            let row = self.row(r);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        Self::new(
            names.to_vec(),
            values,
            self.labels.clone(),
            self.provenance.clone(),
        )
    }

    pub(crate) fn push_row(&mut self, row: &[f64], label: ClassLabel, provenance: u32) {
        debug_assert_eq!(row.len(), self.n_features());
        self.values.extend_from_slice(row);
        self.labels.push(label);
        self.provenance.push(provenance);
    }

    /// Load one CSV capture. The marker column is the one named `marker`
    /// (case-insensitive) or, failing that, the last column. Non-numeric
    /// feature cells (including `inf`/`Infinity`/`NaN` tokens) become
    /// non-finite flags rather than errors; rows are kept at load time and
    /// filtered later by [`crate::preprocess::drop_nonfinite`].
    pub fn load_csv(path: &Path, schema: Option<&[String]>) -> Result<Self> {
        Self::load_csv_with(path, schema, None)
    }

    /// As [`MeasurementTable::load_csv`], mapping numeric markers through a
    /// [`ScenarioMap`].
    pub fn load_csv_with(
        path: &Path,
        schema: Option<&[String]>,
        scenarios: Option<&ScenarioMap>,
    ) -> Result<Self> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(file);

        let headers = reader
            .headers()
            .map_err(|source| Error::Csv {
                path: path.into(),
                source,
            })?
            .clone();
        if headers.len() < 2 {
            return if headers.is_empty() || headers.iter().all(str::is_empty) {
                Err(Error::EmptyFile { path: path.into() })
            } else {
                Err(Error::MissingMarkerColumn { path: path.into() })
            };
        }

        let marker_col = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case("marker"))
            .unwrap_or(headers.len() - 1);
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != marker_col)
            .map(|(_, h)| h.to_string())
            .collect();

        if let Some(expected) = schema {
            if feature_names.len() != expected.len() {
                return Err(Error::HeaderMismatch {
                    path: path.into(),
                    column: feature_names.len().min(expected.len()),
                    expected: format!("{} features", expected.len()),
                    found: format!("{} features", feature_names.len()),
                });
            }
            for (i, (found, want)) in feature_names.iter().zip(expected).enumerate() {
                if found != want {
                    return Err(Error::HeaderMismatch {
                        path: path.into(),
                        column: i,
                        expected: want.clone(),
                        found: found.clone(),
                    });
                }
            }
        }

        let mut values = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            // Ragged rows surface here as a csv::Error (the reader is strict).
            let record = record.map_err(|source| Error::Csv {
                path: path.into(),
                source,
            })?;
            for (i, cell) in record.iter().enumerate() {
                if i == marker_col {
                    labels.push(parse_marker_cell(cell, path, scenarios)?);
                } else {
                    // Rust's float parser already accepts inf/Infinity/NaN in
                    // any case; anything else non-numeric becomes NaN.
                    values.push(cell.parse::<f64>().unwrap_or(f64::NAN));
                }
            }
        }
        if labels.is_empty() {
            return Err(Error::EmptyFile { path: path.into() });
        }
        let provenance = vec![0; labels.len()];
        Self::new(feature_names, values, labels, provenance)
    }

    /// Write as RFC-4180 CSV (header, features in order, marker last).
    /// Finite values round-trip bit-for-bit through [`MeasurementTable::load_csv`].
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_with_comment(path, None)
    }

    /// As [`MeasurementTable::write_csv`], optionally preceding the header
    /// with a `# ...` metadata comment line that the loader skips.
    pub fn write_csv_with_comment(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let mut file = File::create(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        if let Some(comment) = comment {
            writeln!(file, "# {comment}").map_err(|source| Error::Io {
                path: path.into(),
                source,
            })?;
        }
        let mut writer = csv::Writer::from_writer(file);
        let io_err = |source: csv::Error| Error::Csv {
            path: path.into(),
            source,
        };

        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("marker");
        writer.write_record(&header).map_err(io_err)?;

        let mut record = Vec::with_capacity(self.n_features() + 1);
        for r in 0..self.n_rows() {
            record.clear();
            record.extend(self.row(r).iter().map(|v| v.to_string()));
            record.push(self.labels[r].name().to_string());
            writer.write_record(&record).map_err(io_err)?;
        }
        writer.flush().map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        Ok(())
    }

    /// Concatenate tables sharing one schema. Rows keep their order; each
    /// table's provenance indices are offset by the number of sources seen
    /// before it, so merging freshly loaded files yields indices `0..n`.
    pub fn merge(tables: &[MeasurementTable]) -> Result<MeasurementTable> {
        let Some(first) = tables.first() else {
            return Err(Error::InvalidParameter("merge of zero tables".into()));
        };
        for (index, table) in tables.iter().enumerate().skip(1) {
            if table.feature_names != first.feature_names {
                return Err(Error::SchemaMismatch { index });
            }
        }
        let mut merged = MeasurementTable {
            feature_names: first.feature_names.clone(),
            values: Vec::new(),
            labels: Vec::new(),
            provenance: Vec::new(),
        };
        let mut source_offset = 0;
        for table in tables {
            merged.values.extend_from_slice(&table.values);
            merged.labels.extend_from_slice(&table.labels);
            merged
                .provenance
                .extend(table.provenance.iter().map(|&p| p + source_offset));
            source_offset += table.n_sources();
        }
        Ok(merged)
    }

    /// Draw the working sample. Stratified mode keeps `round(fraction · m)`
    /// rows of each class, selected without replacement by a seeded shuffle;
    /// the output order is itself shuffled but deterministic in the seed.
    pub fn stratified_sample(&self, spec: &SampleSpec) -> Result<MeasurementTable> {
        if !(spec.fraction > 0.0 && spec.fraction <= 1.0) {
            return Err(Error::FractionOutOfRange {
                fraction: spec.fraction,
            });
        }
        let mut rng = Rng::new(spec.seed);
        let mut selected = Vec::new();
        if spec.stratified {
            for class in ClassLabel::ALL {
                let mut members = self.rows_of_class(class);
                let take = (spec.fraction * members.len() as f64).round() as usize;
                rng.shuffle(&mut members);
                selected.extend_from_slice(&members[..take.min(members.len())]);
            }
        } else {
            let mut rows: Vec<usize> = (0..self.n_rows()).collect();
            let take = (spec.fraction * rows.len() as f64).round() as usize;
            rng.shuffle(&mut rows);
            selected.extend_from_slice(&rows[..take.min(rows.len())]);
        }
        rng.shuffle(&mut selected);
        Ok(self.subset_rows(&selected))
    }
}

fn parse_marker_cell(
    cell: &str,
    path: &Path,
    scenarios: Option<&ScenarioMap>,
) -> Result<ClassLabel> {
    if let Some(label) = ClassLabel::parse_marker(cell) {
        return Ok(label);
    }
    // Scenario codes sometimes appear as floats ("41.0").
    if let Ok(code) = cell.trim().parse::<f64>()
        && code.fract() == 0.0
        && let Some(map) = scenarios
        && let Some(label) = map.classify(code as i64)
    {
        return Ok(label);
    }
    Err(Error::UnknownMarkerValue {
        path: path.into(),
        value: cell.to_string(),
    })
}
