//! `ingest`: load the capture files, merge, draw the working sample.

use rayon::prelude::*;
use serde::Serialize;

use pmuclass_core::rng::derive;
use pmuclass_core::table::{ClassLabel, MeasurementTable, N_CLASSES, ScenarioMap};
use pmuclass_core::{Error, SampleSpec};

use crate::commands::{files, stream};
use crate::context::RunContext;
use crate::output::write_json;

use pmuclass_core::report::RunMeta;

#[derive(Serialize)]
struct SampleMeta {
    meta: RunMeta,
    source_files: usize,
    total_rows: usize,
    total_per_class: ClassCounts,
    fraction: f64,
    stratified: bool,
    sample_rows: usize,
    sample_per_class: ClassCounts,
}

#[derive(Serialize)]
struct ClassCounts {
    attack: usize,
    natural: usize,
    no_event: usize,
}

impl From<[usize; N_CLASSES]> for ClassCounts {
    fn from(counts: [usize; N_CLASSES]) -> Self {
        Self {
            attack: counts[0],
            natural: counts[1],
            no_event: counts[2],
        }
    }
}

pub fn run(ctx: &RunContext) -> Result<(), Error> {
    let inputs = ctx.config.data.resolve_inputs()?;
    let scenarios = match &ctx.config.data.scenario_map {
        Some(path) => Some(ScenarioMap::from_path(path)?),
        None => None,
    };

    // Parallel loads; merge order stays the file-list order.
    let tables: Vec<MeasurementTable> = inputs
        .par_iter()
        .map(|path| MeasurementTable::load_csv_with(path, None, scenarios.as_ref()))
        .collect::<Result<_, _>>()?;
    let merged = MeasurementTable::merge(&tables)?;

    println!("merged {} files: {} rows", inputs.len(), merged.n_rows());
    print_class_counts(&merged);

    let spec = SampleSpec {
        fraction: ctx.config.sample.fraction,
        seed: derive(ctx.config.seed, stream::SAMPLE),
        stratified: ctx.config.sample.stratified,
    };
    let sample = merged.stratified_sample(&spec)?;
    println!(
        "sample ({}%, {}): {} rows",
        ctx.config.sample.fraction * 100.0,
        if spec.stratified {
            "stratified"
        } else {
            "uniform"
        },
        sample.n_rows()
    );
    print_class_counts(&sample);

    let sample_path = ctx.path(files::SAMPLE);
    sample.write_csv_with_comment(&sample_path, Some(&ctx.meta.csv_comment()))?;
    write_json(
        &ctx.path(files::SAMPLE_META),
        &SampleMeta {
            meta: ctx.meta.clone(),
            source_files: inputs.len(),
            total_rows: merged.n_rows(),
            total_per_class: merged.class_counts().into(),
            fraction: ctx.config.sample.fraction,
            stratified: ctx.config.sample.stratified,
            sample_rows: sample.n_rows(),
            sample_per_class: sample.class_counts().into(),
        },
    )?;
    println!("wrote {}", sample_path.display());
    Ok(())
}

fn print_class_counts(table: &MeasurementTable) {
    let counts = table.class_counts();
    for class in ClassLabel::ALL {
        println!("  {}: {}", class.name(), counts[class.code()]);
    }
}
