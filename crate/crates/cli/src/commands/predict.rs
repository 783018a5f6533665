//! `predict`: score a CSV with a saved model artifact. The artifact's
//! embedded feature subset and scaler are applied to the input rows.

use std::path::Path;

use pmuclass_core::report::RunMeta;
use pmuclass_core::table::{ClassLabel, MeasurementTable};
use pmuclass_core::{Error, TrainedModel};

use crate::output::{csv_error, csv_with_meta, finish};

pub fn run(model_path: &Path, input: &Path, output: &Path) -> Result<(), Error> {
    let model = TrainedModel::load(model_path)?;
    let table = MeasurementTable::load_csv(input, None)?;
    let (labels, scores) = model.predict(&table)?;

    let meta = RunMeta {
        config_hash: model.meta.config_hash.clone(),
        seed: model.meta.seed,
    };
    let mut writer = csv_with_meta(output, &meta)?;
    writer
        .write_record([
            "row_id",
            "predicted",
            "score_attack",
            "score_natural",
            "score_no_event",
        ])
        .map_err(csv_error(output))?;
    for (row, (label, score)) in labels.iter().zip(&scores).enumerate() {
        writer
            .write_record([
                row.to_string(),
                label.name().to_string(),
                score[ClassLabel::Attack.code()].to_string(),
                score[ClassLabel::Natural.code()].to_string(),
                score[ClassLabel::NoEvent.code()].to_string(),
            ])
            .map_err(csv_error(output))?;
    }
    finish(writer, output)?;
    println!("wrote {} predictions to {}", labels.len(), output.display());
    Ok(())
}
