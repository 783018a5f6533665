//! `evaluate`: cross-validated comparison of the configured models on all
//! features and (when enabled) on the top-k selected subset, then train
//! and save the overall best model on the full cleaned table.

use serde::Serialize;

use pmuclass_core::analyze::{ScoreMethod, correlation_ranking, mutual_information};
use pmuclass_core::eval::{CvOptions, RankedReport, compare_models};
use pmuclass_core::models::{
    self, ARTIFACT_VERSION, ArtifactMeta, Design, ModelVariant, TrainedModel,
};
use pmuclass_core::preprocess::{SmoteParams, smote};
use pmuclass_core::report::RunMeta;
use pmuclass_core::rng::derive;
use pmuclass_core::table::MeasurementTable;
use pmuclass_core::{Error, ModelSpec, StandardScaler};

use crate::commands::{files, stream};
use crate::context::RunContext;
use crate::output::{csv_error, csv_with_meta, finish, write_json};

#[derive(Serialize)]
struct EvalArtifact {
    meta: RunMeta,
    /// Echo of the effective run configuration (overrides applied).
    config: pmuclass_core::PipelineConfig,
    leakage: String,
    n_folds: usize,
    full_features: Vec<RankedReport>,
    selected_features: Option<SelectedFeaturesSection>,
}

#[derive(Serialize)]
struct SelectedFeaturesSection {
    method: String,
    k: usize,
    features: Vec<String>,
    results: Vec<RankedReport>,
}

pub fn run(ctx: &RunContext) -> Result<(), Error> {
    let cleaned = MeasurementTable::load_csv(&ctx.path(files::CLEANED), None)?;
    let specs = ctx.config.models.specs()?;
    let base_opts = CvOptions {
        n_folds: ctx.config.evaluation.n_folds,
        seed: ctx.config.seed,
        leakage: ctx.config.evaluation.leakage,
        smote: ctx.config.preprocess.smote.settings(),
        smote_before_scaling: ctx.config.preprocess.smote_before_scaling,
        feature_subset: None,
    };

    println!(
        "evaluating {} models, {} folds, {} mode",
        specs.len(),
        base_opts.n_folds,
        base_opts.leakage.name()
    );
    let full = compare_models(&cleaned, &specs, &base_opts)?;
    print_ranking("all features", &full);

    let selected = if ctx.config.features.selection_enabled {
        let method = ctx.config.features.method;
        let ranking = match method {
            ScoreMethod::MutualInformation => {
                mutual_information(&cleaned, ctx.config.features.mi_bins)?
            }
            ScoreMethod::PearsonAbs => correlation_ranking(&cleaned)?,
        };
        let k = ctx.config.features.top_k.min(cleaned.n_features());
        let features = ranking.select_top_k(k)?;
        let opts = CvOptions {
            feature_subset: Some(features.clone()),
            ..base_opts.clone()
        };
        let results = compare_models(&cleaned, &specs, &opts)?;
        print_ranking(&format!("top-{k} by {}", method.name()), &results);
        Some(SelectedFeaturesSection {
            method: method.name().to_string(),
            k,
            features,
            results,
        })
    } else {
        None
    };

    write_metric_csvs(ctx, cleaned.n_features(), &full, selected.as_ref())?;

    // Overall winner across both feature sets, by aggregate f1_macro.
    let (winning_spec, winning_subset) = match &selected {
        Some(s) if s.results[0].report.aggregate.f1_macro > full[0].report.aggregate.f1_macro => {
            (s.results[0].spec.clone(), Some(s.features.clone()))
        }
        _ => (full[0].spec.clone(), None),
    };

    write_json(
        &ctx.path(files::EVAL_REPORT),
        &EvalArtifact {
            meta: ctx.meta.clone(),
            config: ctx.config.clone(),
            leakage: base_opts.leakage.name().to_string(),
            n_folds: base_opts.n_folds,
            full_features: full,
            selected_features: selected,
        },
    )?;
    println!("wrote {}", ctx.path(files::EVAL_REPORT).display());

    let artifact = train_final(ctx, &cleaned, &winning_spec, winning_subset.as_deref())?;
    artifact.save(&ctx.path(files::MODEL))?;
    println!(
        "wrote {} ({})",
        ctx.path(files::MODEL).display(),
        winning_spec.name()
    );
    Ok(())
}

/// Fit the winning spec on the whole cleaned table (scaler plus SMOTE, as
/// configured) so `predict` has a production artifact.
fn train_final(
    ctx: &RunContext,
    cleaned: &MeasurementTable,
    spec: &ModelSpec,
    subset: Option<&[String]>,
) -> Result<TrainedModel, Error> {
    let working = match subset {
        Some(names) => cleaned.select_features(names)?,
        None => cleaned.clone(),
    };
    let smote_params = ctx.config.preprocess.smote.settings().map(|s| SmoteParams {
        k_neighbors: s.k_neighbors,
        seed: derive(ctx.config.seed, stream::FINAL_SMOTE),
        classes: s.classes,
    });

    let (train, scaler) = if ctx.config.preprocess.smote_before_scaling {
        let augmented = match &smote_params {
            Some(params) => smote(&working, params)?.0,
            None => working.clone(),
        };
        let scaler = StandardScaler::fit(&augmented)?;
        (scaler.apply(&augmented)?, scaler)
    } else {
        let scaler = StandardScaler::fit(&working)?;
        let scaled = scaler.apply(&working)?;
        let augmented = match &smote_params {
            Some(params) => smote(&scaled, params)?.0,
            None => scaled,
        };
        (augmented, scaler)
    };

    let design = Design::from_table(&train);
    let seed = derive(ctx.config.seed, stream::FINAL_MODEL);
    let variant = match spec {
        ModelSpec::RandomForest(params) => {
            let params = models::RandomForestParams {
                seed,
                ..params.clone()
            };
            ModelVariant::RandomForest(models::forest::train(design, train.labels(), &params)?)
        }
        ModelSpec::Knn(params) => {
            ModelVariant::Knn(models::knn::fit(design, train.labels(), params)?)
        }
        ModelSpec::Softmax(params) => {
            let params = models::SoftmaxParams {
                seed,
                ..params.clone()
            };
            ModelVariant::Softmax(models::softmax::train(design, train.labels(), &params)?)
        }
    };
    Ok(TrainedModel {
        version: ARTIFACT_VERSION,
        meta: ArtifactMeta {
            config_hash: ctx.meta.config_hash.clone(),
            seed: ctx.meta.seed,
        },
        feature_subset: working.feature_names().to_vec(),
        scaler,
        variant,
    })
}

fn print_ranking(title: &str, ranked: &[RankedReport]) {
    println!("{title}:");
    for entry in ranked {
        let m = &entry.report.aggregate;
        println!(
            "  {}. {:<13} f1_macro={:.4} accuracy={:.4} precision={:.4} recall={:.4}",
            entry.rank,
            entry.report.model,
            m.f1_macro,
            m.accuracy,
            m.precision_macro,
            m.recall_macro
        );
    }
}

fn write_metric_csvs(
    ctx: &RunContext,
    n_full_features: usize,
    full: &[RankedReport],
    selected: Option<&SelectedFeaturesSection>,
) -> Result<(), Error> {
    let mut sections: Vec<(String, usize, &[RankedReport])> =
        vec![("full".to_string(), n_full_features, full)];
    if let Some(s) = selected {
        sections.push((format!("top_{}", s.k), s.k, &s.results));
    }

    let metrics_path = ctx.path(files::METRICS_BY_MODEL);
    let mut writer = csv_with_meta(&metrics_path, &ctx.meta)?;
    writer
        .write_record([
            "feature_set",
            "rank",
            "model",
            "n_features",
            "accuracy",
            "precision_macro",
            "recall_macro",
            "f1_macro",
        ])
        .map_err(csv_error(&metrics_path))?;
    for (set_name, n_features, ranked) in &sections {
        for entry in *ranked {
            let m = &entry.report.aggregate;
            writer
                .write_record([
                    set_name.clone(),
                    entry.rank.to_string(),
                    entry.report.model.clone(),
                    n_features.to_string(),
                    m.accuracy.to_string(),
                    m.precision_macro.to_string(),
                    m.recall_macro.to_string(),
                    m.f1_macro.to_string(),
                ])
                .map_err(csv_error(&metrics_path))?;
        }
    }
    finish(writer, &metrics_path)?;
    println!("wrote {}", metrics_path.display());

    let cm_path = ctx.path(files::CONFUSION_MATRIX);
    let mut writer = csv_with_meta(&cm_path, &ctx.meta)?;
    writer
        .write_record([
            "feature_set",
            "model",
            "true_class",
            "predicted_class",
            "count",
        ])
        .map_err(csv_error(&cm_path))?;
    for (set_name, _, ranked) in &sections {
        for entry in *ranked {
            for (t, row) in entry.report.pooled.counts.iter().enumerate() {
                for (p, count) in row.iter().enumerate() {
                    writer
                        .write_record([
                            set_name.clone(),
                            entry.report.model.clone(),
                            class_name(t),
                            class_name(p),
                            count.to_string(),
                        ])
                        .map_err(csv_error(&cm_path))?;
                }
            }
        }
    }
    finish(writer, &cm_path)?;
    println!("wrote {}", cm_path.display());
    Ok(())
}

fn class_name(code: usize) -> String {
    pmuclass_core::ClassLabel::from_code(code)
        .expect("code < 3")
        .name()
        .to_string()
}
