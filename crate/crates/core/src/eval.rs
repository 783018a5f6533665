//! Stratified k-fold cross-validation, macro metrics, model comparison and
//! grid-search tuning.
//!
//! Two leakage modes exist. `safe` fits the scaler and SMOTE on training
//! folds only — no statistic computed from a test row reaches any fitted
//! transformer or model. `paper-literal` scales and oversamples the whole
//! table once before splitting, which leaks synthetic neighbours across
//! folds but mirrors how preprocessing-before-CV pipelines are often run;
//! it exists so that runs can be compared against numbers produced that
//! way. Every random stream derives from (seed, fold), so reports are
//! identical under any scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{self, Design, KnnParams, RandomForestParams, SoftmaxParams, SplitCriterion};
use crate::preprocess::{SmoteParams, SmoteRecord, StandardScaler, smote};
use crate::rng::{Rng, derive};
use crate::table::{ClassLabel, MeasurementTable, N_CLASSES};

/// Substream tags for seed derivation.
const STREAM_MODEL: u64 = 1;
const STREAM_SMOTE_FOLD: u64 = 2;
const STREAM_SMOTE_WHOLE: u64 = 3;

/// Materialised fold assignment: `assignments[row]` is the fold whose test
/// set contains that row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r] != fold)
            .collect()
    }
}

/// Per class, shuffle the class's rows with the seed and deal them
/// round-robin to folds, so per-fold class counts differ by at most one.
/// Absent classes are skipped; a present class smaller than `n_folds` is an
/// error.
pub fn stratified_kfold(labels: &[ClassLabel], n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::InvalidParameter("n_folds must be at least 2".into()));
    }
    let mut assignments = vec![0usize; labels.len()];
    let mut rng = Rng::new(seed);
    for class in ClassLabel::ALL {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == class).collect();
        if rows.is_empty() {
            continue;
        }
        if rows.len() < n_folds {
            return Err(Error::ClassSmallerThanFolds {
                class,
                count: rows.len(),
                n_folds,
            });
        }
        rng.shuffle(&mut rows);
        for (j, row) in rows.into_iter().enumerate() {
            assignments[row] = j % n_folds;
        }
    }
    Ok(FoldPlan {
        n_folds,
        seed,
        assignments,
    })
}

/// 3×3 confusion counts; rows are the true class, columns the prediction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Self {
        debug_assert_eq!(truth.len(), predicted.len());
        let mut cm = Self::default();
        for (t, p) in truth.iter().zip(predicted) {
            cm.counts[t.code()][p.code()] += 1;
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (mine, theirs) in self
            .counts
            .iter_mut()
            .flatten()
            .zip(other.counts.iter().flatten())
        {
            *mine += theirs;
        }
    }
}

/// The four macro metrics reported per fold and in aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
}

/// A per-class metric whose denominator was zero (defined as 0, logged).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroDivision {
    pub metric: String,
    pub class: ClassLabel,
}

/// Accuracy plus unweighted class means of precision, recall and F1.
/// Zero-denominator terms contribute 0 and are reported as events, never
/// errors — degenerate folds must not abort a run.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<(MetricSet, Vec<ZeroDivision>)> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut events = Vec::new();
    let mut precision = [0.0; N_CLASSES];
    let mut recall = [0.0; N_CLASSES];
    let mut f1 = [0.0; N_CLASSES];
    for c in 0..N_CLASSES {
        let class = ClassLabel::from_code(c).expect("c < N_CLASSES");
        let diag = cm.counts[c][c] as f64;
        let col_sum: u64 = (0..N_CLASSES).map(|r| cm.counts[r][c]).sum();
        let row_sum: u64 = cm.counts[c].iter().sum();
        if col_sum == 0 {
            events.push(ZeroDivision {
                metric: "precision".into(),
                class,
            });
        } else {
            precision[c] = diag / col_sum as f64;
        }
        if row_sum == 0 {
            events.push(ZeroDivision {
                metric: "recall".into(),
                class,
            });
        } else {
            recall[c] = diag / row_sum as f64;
        }
        if precision[c] + recall[c] > 0.0 {
            f1[c] = 2.0 * precision[c] * recall[c] / (precision[c] + recall[c]);
        }
    }
    let trace: u64 = (0..N_CLASSES).map(|c| cm.counts[c][c]).sum();
    let metrics = MetricSet {
        accuracy: trace as f64 / total as f64,
        precision_macro: precision.iter().sum::<f64>() / N_CLASSES as f64,
        recall_macro: recall.iter().sum::<f64>() / N_CLASSES as f64,
        f1_macro: f1.iter().sum::<f64>() / N_CLASSES as f64,
    };
    Ok((metrics, events))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeakageMode {
    /// Scaler and SMOTE fit on training folds only.
    Safe,
    /// Scaler and SMOTE applied to the whole table before splitting.
    PaperLiteral,
}

impl LeakageMode {
    pub fn name(self) -> &'static str {
        match self {
            LeakageMode::Safe => "safe",
            LeakageMode::PaperLiteral => "paper-literal",
        }
    }
}

/// One classifier plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(RandomForestParams),
    Knn(KnnParams),
    Softmax(SoftmaxParams),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::RandomForest(_) => "random_forest",
            ModelSpec::Knn(_) => "knn",
            ModelSpec::Softmax(_) => "softmax",
        }
    }
}

/// SMOTE knobs inside cross-validation; seeds derive from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteSettings {
    pub k_neighbors: usize,
    pub classes: Option<Vec<ClassLabel>>,
}

impl Default for SmoteSettings {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            classes: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvOptions {
    pub n_folds: usize,
    pub seed: u64,
    pub leakage: LeakageMode,
    /// `None` disables oversampling.
    pub smote: Option<SmoteSettings>,
    /// Apply SMOTE in raw feature space, before the scaler is fitted.
    pub smote_before_scaling: bool,
    pub feature_subset: Option<Vec<String>>,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            n_folds: 10,
            seed: 0,
            leakage: LeakageMode::Safe,
            smote: Some(SmoteSettings::default()),
            smote_before_scaling: false,
            feature_subset: None,
        }
    }
}

/// Everything fitted from one training fold.
pub struct FoldTransforms {
    /// Scaled (and oversampled) training table.
    pub train: MeasurementTable,
    pub scaler: StandardScaler,
    pub smote_records: Vec<SmoteRecord>,
}

/// Fit the per-fold transformers from training rows only. This is the
/// leakage boundary: the function never sees test rows, so nothing derived
/// from them can reach the scaler, SMOTE or the model.
pub fn fit_fold_transforms(
    table: &MeasurementTable,
    train_rows: &[usize],
    opts: &CvOptions,
    fold: usize,
) -> Result<FoldTransforms> {
    let raw_train = table.subset_rows(train_rows);
    let smote_params = opts.smote.as_ref().map(|s| SmoteParams {
        k_neighbors: s.k_neighbors,
        seed: derive(derive(opts.seed, STREAM_SMOTE_FOLD), fold as u64),
        classes: s.classes.clone(),
    });
    if opts.smote_before_scaling {
        let (augmented, smote_records) = match &smote_params {
            Some(params) => smote(&raw_train, params)?,
            None => (raw_train, Vec::new()),
        };
        let scaler = StandardScaler::fit(&augmented)?;
        let train = scaler.apply(&augmented)?;
        Ok(FoldTransforms {
            train,
            scaler,
            smote_records,
        })
    } else {
        let scaler = StandardScaler::fit(&raw_train)?;
        let scaled = scaler.apply(&raw_train)?;
        let (train, smote_records) = match &smote_params {
            Some(params) => smote(&scaled, params)?,
            None => (scaled, Vec::new()),
        };
        Ok(FoldTransforms {
            train,
            scaler,
            smote_records,
        })
    }
}

/// Scale-and-oversample the whole table once (`paper-literal` mode).
fn prepare_whole_table(
    table: &MeasurementTable,
    opts: &CvOptions,
) -> Result<(MeasurementTable, usize)> {
    let smote_params = opts.smote.as_ref().map(|s| SmoteParams {
        k_neighbors: s.k_neighbors,
        seed: derive(opts.seed, STREAM_SMOTE_WHOLE),
        classes: s.classes.clone(),
    });
    let prepared = if opts.smote_before_scaling {
        let augmented = match &smote_params {
            Some(params) => smote(table, params)?.0,
            None => table.clone(),
        };
        StandardScaler::fit(&augmented)?.apply(&augmented)?
    } else {
        let scaled = StandardScaler::fit(table)?.apply(table)?;
        match &smote_params {
            Some(params) => smote(&scaled, params)?.0,
            None => scaled,
        }
    };
    let added = prepared.n_rows() - table.n_rows();
    Ok((prepared, added))
}

fn fold_model_seed(opts: &CvOptions, fold: usize) -> u64 {
    derive(derive(opts.seed, STREAM_MODEL), fold as u64)
}

/// Train `spec` on the (already transformed) training table and predict the
/// (already transformed) test table.
fn train_and_predict(
    spec: &ModelSpec,
    train: &MeasurementTable,
    test: &MeasurementTable,
    model_seed: u64,
) -> Result<Vec<ClassLabel>> {
    let train_design = Design::from_table(train);
    let test_design = Design::from_table(test);
    match spec {
        ModelSpec::RandomForest(params) => {
            let params = RandomForestParams {
                seed: derive(model_seed, params.seed),
                ..params.clone()
            };
            let model = models::forest::train(train_design, train.labels(), &params)?;
            Ok(models::forest::predict(&model, test_design)?.0)
        }
        ModelSpec::Knn(params) => {
            let model = models::knn::fit(train_design, train.labels(), params)?;
            Ok(models::knn::predict(&model, test_design)?.0)
        }
        ModelSpec::Softmax(params) => {
            let params = SoftmaxParams {
                seed: derive(model_seed, params.seed),
                ..params.clone()
            };
            let model = models::softmax::train(train_design, train.labels(), &params)?;
            Ok(models::softmax::predict(&model, test_design)?.0)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldEval {
    pub fold: usize,
    pub smote_added: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub zero_division: Vec<ZeroDivision>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub params: serde_json::Value,
    pub leakage: LeakageMode,
    pub n_folds: usize,
    pub seed: u64,
    pub feature_subset: Option<Vec<String>>,
    /// Rows in the table that was folded (after whole-table SMOTE in
    /// `paper-literal` mode).
    pub n_rows_evaluated: usize,
    pub per_fold: Vec<FoldEval>,
    /// Arithmetic mean of the per-fold metrics.
    pub aggregate: MetricSet,
    pub pooled: ConfusionMatrix,
}

/// Run stratified k-fold cross-validation for one model spec.
///
/// The fold plan is derived from (labels, n_folds, seed) of whatever table
/// is actually split: the input table in `safe` mode, the whole-table
/// transformed one in `paper-literal` mode.
pub fn cross_validate(
    table: &MeasurementTable,
    spec: &ModelSpec,
    opts: &CvOptions,
) -> Result<EvalReport> {
    let working = match &opts.feature_subset {
        Some(names) => table.select_features(names)?,
        None => table.clone(),
    };

    let per_fold: Vec<FoldEval> = match opts.leakage {
        LeakageMode::Safe => {
            let plan = stratified_kfold(working.labels(), opts.n_folds, opts.seed)?;
            (0..opts.n_folds)
                .into_par_iter()
                .map(|fold| {
                    let transforms =
                        fit_fold_transforms(&working, &plan.train_rows(fold), opts, fold)?;
                    let test_raw = working.subset_rows(&plan.test_rows(fold));
                    let test = transforms.scaler.apply(&test_raw)?;
                    let predicted = train_and_predict(
                        spec,
                        &transforms.train,
                        &test,
                        fold_model_seed(opts, fold),
                    )?;
                    fold_eval(
                        fold,
                        transforms.smote_records.len(),
                        test.labels(),
                        &predicted,
                    )
                })
                .collect::<Result<_>>()?
        }
        LeakageMode::PaperLiteral => {
            let (prepared, _) = prepare_whole_table(&working, opts)?;
            let plan = stratified_kfold(prepared.labels(), opts.n_folds, opts.seed)?;
            (0..opts.n_folds)
                .into_par_iter()
                .map(|fold| {
                    let train = prepared.subset_rows(&plan.train_rows(fold));
                    let test = prepared.subset_rows(&plan.test_rows(fold));
                    let predicted =
                        train_and_predict(spec, &train, &test, fold_model_seed(opts, fold))?;
                    fold_eval(fold, 0, test.labels(), &predicted)
                })
                .collect::<Result<_>>()?
        }
    };

    let n_rows_evaluated = per_fold.iter().map(|f| f.confusion.total() as usize).sum();
    let mut pooled = ConfusionMatrix::default();
    let mut sums = [0.0; 4];
    for fold in &per_fold {
        pooled.add(&fold.confusion);
        sums[0] += fold.metrics.accuracy;
        sums[1] += fold.metrics.precision_macro;
        sums[2] += fold.metrics.recall_macro;
        sums[3] += fold.metrics.f1_macro;
    }
    let k = per_fold.len() as f64;
    let aggregate = MetricSet {
        accuracy: sums[0] / k,
        precision_macro: sums[1] / k,
        recall_macro: sums[2] / k,
        f1_macro: sums[3] / k,
    };

    Ok(EvalReport {
        model: spec.name().to_string(),
        params: serde_json::to_value(spec).expect("spec serialises"),
        leakage: opts.leakage,
        n_folds: opts.n_folds,
        seed: opts.seed,
        feature_subset: opts.feature_subset.clone(),
        n_rows_evaluated,
        per_fold,
        aggregate,
        pooled,
    })
}

fn fold_eval(
    fold: usize,
    smote_added: usize,
    truth: &[ClassLabel],
    predicted: &[ClassLabel],
) -> Result<FoldEval> {
    let confusion = ConfusionMatrix::from_predictions(truth, predicted);
    let (metrics, zero_division) = compute_metrics(&confusion)?;
    Ok(FoldEval {
        fold,
        smote_added,
        confusion,
        metrics,
        zero_division,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedReport {
    pub rank: usize,
    pub spec: ModelSpec,
    pub report: EvalReport,
}

/// Evaluate every spec on the identical fold derivation and rank by
/// `f1_macro` descending (stable under ties).
pub fn compare_models(
    table: &MeasurementTable,
    specs: &[ModelSpec],
    opts: &CvOptions,
) -> Result<Vec<RankedReport>> {
    let mut evaluated: Vec<(ModelSpec, EvalReport)> = specs
        .iter()
        .map(|spec| Ok((spec.clone(), cross_validate(table, spec, opts)?)))
        .collect::<Result<_>>()?;
    evaluated.sort_by(|a, b| b.1.aggregate.f1_macro.total_cmp(&a.1.aggregate.f1_macro));
    Ok(evaluated
        .into_iter()
        .enumerate()
        .map(|(i, (spec, report))| RankedReport {
            rank: i + 1,
            spec,
            report,
        })
        .collect())
}

/// Cartesian hyperparameter grid for the random forest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<Option<usize>>,
    pub criterion: Vec<SplitCriterion>,
}

impl Default for TuneGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![50, 100, 200],
            max_depth: vec![Some(8), Some(16), None],
            criterion: vec![SplitCriterion::Gini, SplitCriterion::Entropy],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TunePoint {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub criterion: SplitCriterion,
    pub mean_accuracy: f64,
    pub mean_f1_macro: f64,
}

/// Exhaustively evaluate the grid (n_trees outer, max_depth middle,
/// criterion inner) by mean CV accuracy. Ties keep the earlier point.
/// Model seeds depend on parameters, not grid position, so identical
/// combinations always score identically and a grid containing the
/// baseline point can never fall below it.
pub fn grid_search(
    table: &MeasurementTable,
    base: &RandomForestParams,
    grid: &TuneGrid,
    opts: &CvOptions,
) -> Result<(RandomForestParams, Vec<TunePoint>)> {
    if grid.n_trees.is_empty() {
        return Err(Error::EmptyGrid { axis: "n_trees" });
    }
    if grid.max_depth.is_empty() {
        return Err(Error::EmptyGrid { axis: "max_depth" });
    }
    if grid.criterion.is_empty() {
        return Err(Error::EmptyGrid { axis: "criterion" });
    }

    let mut combos = Vec::new();
    for &n_trees in &grid.n_trees {
        for &max_depth in &grid.max_depth {
            for &criterion in &grid.criterion {
                combos.push(RandomForestParams {
                    n_trees,
                    max_depth,
                    criterion,
                    ..base.clone()
                });
            }
        }
    }

    let trace: Vec<TunePoint> = combos
        .par_iter()
        .map(|params| {
            let report = cross_validate(table, &ModelSpec::RandomForest(params.clone()), opts)?;
            Ok(TunePoint {
                n_trees: params.n_trees,
                max_depth: params.max_depth,
                criterion: params.criterion,
                mean_accuracy: report.aggregate.accuracy,
                mean_f1_macro: report.aggregate.f1_macro,
            })
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, point) in trace.iter().enumerate() {
        if point.mean_accuracy > trace[best].mean_accuracy {
            best = i;
        }
    }
    Ok((combos[best].clone(), trace))
}
