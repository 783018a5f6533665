//! `analyze`: correlation and mutual-information rankings plus optional
//! per-feature histogram data.

use pmuclass_core::Error;
use pmuclass_core::analyze::{
    FeatureScoreList, correlation_ranking, histogram, mutual_information,
};
use pmuclass_core::table::MeasurementTable;

use crate::commands::files;
use crate::context::RunContext;
use crate::output::{csv_error, csv_with_meta, finish};

pub fn run(ctx: &RunContext) -> Result<(), Error> {
    let cleaned = MeasurementTable::load_csv(&ctx.path(files::CLEANED), None)?;

    let pearson = correlation_ranking(&cleaned)?;
    let mi = mutual_information(&cleaned, ctx.config.features.mi_bins)?;

    let scores_path = ctx.path(files::FEATURE_SCORES);
    let mut writer = csv_with_meta(&scores_path, &ctx.meta)?;
    writer
        .write_record(["method", "rank", "feature", "score", "selected"])
        .map_err(csv_error(&scores_path))?;
    for (list, top_k) in [
        (&pearson, ctx.config.features.correlation_top_k),
        (&mi, ctx.config.features.top_k),
    ] {
        write_ranking(&mut writer, list, top_k, &scores_path)?;
    }
    finish(writer, &scores_path)?;
    println!("wrote {}", scores_path.display());

    if !ctx.config.features.histogram_features.is_empty() {
        let hist_path = ctx.path(files::HISTOGRAMS);
        let mut writer = csv_with_meta(&hist_path, &ctx.meta)?;
        writer
            .write_record(["feature", "bin_low", "bin_high", "count"])
            .map_err(csv_error(&hist_path))?;
        for feature in &ctx.config.features.histogram_features {
            for bin in histogram(&cleaned, feature, ctx.config.features.histogram_bins)? {
                writer
                    .write_record([
                        feature.clone(),
                        bin.low.to_string(),
                        bin.high.to_string(),
                        bin.count.to_string(),
                    ])
                    .map_err(csv_error(&hist_path))?;
            }
        }
        finish(writer, &hist_path)?;
        println!("wrote {}", hist_path.display());
    }
    Ok(())
}

fn write_ranking(
    writer: &mut csv::Writer<std::fs::File>,
    list: &FeatureScoreList,
    top_k: usize,
    path: &std::path::Path,
) -> Result<(), Error> {
    for (i, entry) in list.entries.iter().enumerate() {
        let rank = i + 1;
        writer
            .write_record([
                list.method.name().to_string(),
                rank.to_string(),
                entry.feature.clone(),
                entry.score.to_string(),
                (rank <= top_k).to_string(),
            ])
            .map_err(csv_error(path))?;
    }
    Ok(())
}
