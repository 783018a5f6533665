//! `preprocess`: non-finite removal and isolation-forest outlier filtering,
//! plus the 2-D PCA projection data used to visualise normal vs outlier
//! rows.

use pmuclass_core::analyze::{pca_fit, pca_project};
use pmuclass_core::preprocess::{IsolationForestParams, drop_nonfinite, remove_outliers};
use pmuclass_core::report::{AuditStep, PreprocessAudit};
use pmuclass_core::rng::derive;
use pmuclass_core::table::MeasurementTable;
use pmuclass_core::{Error, IsolationForest, StandardScaler};

use crate::commands::{files, stream};
use crate::context::RunContext;
use crate::output::{csv_error, csv_with_meta, finish, write_json};

pub fn run(ctx: &RunContext) -> Result<(), Error> {
    let sample = MeasurementTable::load_csv(&ctx.path(files::SAMPLE), None)?;
    let mut steps = Vec::new();

    let (finite, dropped) = drop_nonfinite(&sample)?;
    steps.push(AuditStep {
        step: "drop_nonfinite".into(),
        rows_before: sample.n_rows(),
        rows_after: finite.n_rows(),
        removed: dropped,
        added: 0,
        params: serde_json::json!({}),
    });

    let iforest_cfg = &ctx.config.preprocess.iforest;
    let params = IsolationForestParams {
        n_trees: iforest_cfg.n_trees,
        subsample_size: iforest_cfg
            .subsample_size
            .unwrap_or_else(|| finite.n_rows().min(256)),
        seed: derive(ctx.config.seed, stream::IFOREST),
    };
    let forest = IsolationForest::fit(&finite, &params)?;
    let scores = forest.score_table(&finite)?;
    let contamination = ctx.config.preprocess.contamination;
    let (cleaned, removed) = remove_outliers(&finite, &forest, contamination)?;
    steps.push(AuditStep {
        step: "remove_outliers".into(),
        rows_before: finite.n_rows(),
        rows_after: cleaned.n_rows(),
        removed: removed.len(),
        added: 0,
        params: serde_json::json!({
            "n_trees": params.n_trees,
            "subsample_size": params.subsample_size,
            "seed": params.seed,
            "contamination": contamination,
        }),
    });

    // Plot-ready projection of every pre-removal row, tagged by outcome.
    // Fitted on standardised values so no single column dominates.
    let scaler = StandardScaler::fit(&finite)?;
    let scaled = scaler.apply(&finite)?;
    let pca = pca_fit(&scaled)?;
    let projection = pca_project(&pca, &scaled)?;
    let pca_path = ctx.path(files::PCA_PROJECTION);
    let mut writer = csv_with_meta(&pca_path, &ctx.meta)?;
    writer
        .write_record(["row_id", "pc1", "pc2", "is_outlier"])
        .map_err(csv_error(&pca_path))?;
    for (row, (pc1, pc2)) in projection.iter().enumerate() {
        let is_outlier = removed.binary_search(&row).is_ok();
        writer
            .write_record([
                row.to_string(),
                pc1.to_string(),
                pc2.to_string(),
                is_outlier.to_string(),
            ])
            .map_err(csv_error(&pca_path))?;
    }
    finish(writer, &pca_path)?;

    let outlier_path = ctx.path(files::OUTLIERS);
    let mut writer = csv_with_meta(&outlier_path, &ctx.meta)?;
    writer
        .write_record(["row_id", "score"])
        .map_err(csv_error(&outlier_path))?;
    for &row in &removed {
        writer
            .write_record([row.to_string(), scores[row].to_string()])
            .map_err(csv_error(&outlier_path))?;
    }
    finish(writer, &outlier_path)?;

    let cleaned_path = ctx.path(files::CLEANED);
    cleaned.write_csv_with_comment(&cleaned_path, Some(&ctx.meta.csv_comment()))?;
    write_json(
        &ctx.path(files::PREPROCESS_AUDIT),
        &PreprocessAudit {
            meta: ctx.meta.clone(),
            steps,
        },
    )?;

    println!(
        "dropped {dropped} non-finite rows, removed {} outliers, kept {} rows",
        removed.len(),
        cleaned.n_rows()
    );
    println!("wrote {}", cleaned_path.display());
    Ok(())
}
