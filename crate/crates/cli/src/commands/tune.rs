//! `tune`: exhaustive random-forest grid search on the cleaned table.

use serde::Serialize;

use pmuclass_core::eval::{CvOptions, TunePoint, cross_validate, grid_search};
use pmuclass_core::report::RunMeta;
use pmuclass_core::table::MeasurementTable;
use pmuclass_core::{Error, ModelSpec};

use crate::commands::files;
use crate::context::RunContext;
use crate::output::{csv_error, csv_with_meta, finish, write_json};

#[derive(Serialize)]
struct BestParams {
    meta: RunMeta,
    baseline_accuracy: f64,
    best_accuracy: f64,
    improved: bool,
    best: serde_json::Value,
}

pub fn run(ctx: &RunContext) -> Result<(), Error> {
    let cleaned = MeasurementTable::load_csv(&ctx.path(files::CLEANED), None)?;
    let base = ctx.config.models.random_forest.params();
    let opts = CvOptions {
        n_folds: ctx.config.evaluation.n_folds,
        seed: ctx.config.seed,
        leakage: ctx.config.evaluation.leakage,
        smote: ctx.config.preprocess.smote.settings(),
        smote_before_scaling: ctx.config.preprocess.smote_before_scaling,
        feature_subset: None,
    };

    let baseline = cross_validate(&cleaned, &ModelSpec::RandomForest(base.clone()), &opts)?
        .aggregate
        .accuracy;
    let (best, trace) = grid_search(&cleaned, &base, &ctx.config.tuning, &opts)?;
    let best_accuracy = trace
        .iter()
        .map(|p| p.mean_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);

    println!("baseline accuracy {baseline:.4}");
    println!(
        "best of {} grid points: n_trees={} max_depth={} criterion={} accuracy {best_accuracy:.4}",
        trace.len(),
        best.n_trees,
        best.max_depth
            .map_or("unlimited".to_string(), |d| d.to_string()),
        best.criterion.name(),
    );

    let trace_path = ctx.path(files::TUNING_TRACE);
    let mut writer = csv_with_meta(&trace_path, &ctx.meta)?;
    writer
        .write_record([
            "n_trees",
            "max_depth",
            "criterion",
            "mean_accuracy",
            "mean_f1_macro",
        ])
        .map_err(csv_error(&trace_path))?;
    for TunePoint {
        n_trees,
        max_depth,
        criterion,
        mean_accuracy,
        mean_f1_macro,
    } in &trace
    {
        writer
            .write_record([
                n_trees.to_string(),
                max_depth.map_or(String::new(), |d| d.to_string()),
                criterion.name().to_string(),
                mean_accuracy.to_string(),
                mean_f1_macro.to_string(),
            ])
            .map_err(csv_error(&trace_path))?;
    }
    finish(writer, &trace_path)?;

    write_json(
        &ctx.path(files::BEST_PARAMS),
        &BestParams {
            meta: ctx.meta.clone(),
            baseline_accuracy: baseline,
            best_accuracy,
            improved: best_accuracy > baseline,
            best: serde_json::to_value(&best)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?,
        },
    )?;
    println!("wrote {}", ctx.path(files::BEST_PARAMS).display());
    println!("wrote {}", trace_path.display());
    Ok(())
}
