//! `synth`: write a seeded synthetic dataset for trying the pipeline
//! without the real captures.

use std::path::Path;

use pmuclass_core::Error;
use pmuclass_core::synth::{SynthSpec, write_files};

pub fn run(
    rows: usize,
    files: usize,
    features: usize,
    seed: u64,
    nonfinite: f64,
    separation: f64,
    out: &Path,
) -> Result<(), Error> {
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.into(),
        source,
    })?;
    let spec = SynthSpec {
        rows,
        features,
        informative: (features / 3).max(1),
        separation,
        nonfinite_fraction: nonfinite,
        seed,
        ..Default::default()
    };
    let paths = write_files(&spec, files, out)?;
    println!(
        "wrote {} capture files under {}",
        paths.len(),
        out.display()
    );
    Ok(())
}
