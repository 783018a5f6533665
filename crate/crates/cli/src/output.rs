//! Artifact writers. CSV outputs start with a `# config_hash=… seed=…`
//! comment line; JSON outputs embed the same fields in a `meta` object.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use pmuclass_core::Error;
use pmuclass_core::report::RunMeta;
use serde::Serialize;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut file = File::create(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    serde_json::to_writer_pretty(&mut file, value).map_err(|e| Error::Config {
        path: path.into(),
        message: e.to_string(),
    })?;
    file.write_all(b"\n").map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

/// A CSV writer whose first line is the run-metadata comment.
pub fn csv_with_meta(path: &Path, meta: &RunMeta) -> Result<csv::Writer<File>, Error> {
    let mut file = File::create(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    writeln!(file, "# {}", meta.csv_comment()).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

pub fn finish(mut writer: csv::Writer<File>, path: &Path) -> Result<(), Error> {
    writer.flush().map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

pub fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.into(),
        source,
    }
}
