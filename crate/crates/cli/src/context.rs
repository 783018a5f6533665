//! Shared run setup: config loading, overrides, exit-code mapping.

use std::fmt;
use std::path::{Path, PathBuf};

use pmuclass_core::report::RunMeta;
use pmuclass_core::{Error, PipelineConfig};

/// Environment variable overriding the output directory (only).
pub const OUT_DIR_ENV: &str = "PMUCLASS_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Ingest,
    Preprocess,
    Analyze,
    Evaluate,
    Tune,
    Predict,
    Synth,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Ingest => "ingest",
            Phase::Preprocess => "preprocess",
            Phase::Analyze => "analyze",
            Phase::Evaluate => "evaluate",
            Phase::Tune => "tune",
            Phase::Predict => "predict",
            Phase::Synth => "synth",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub phase: Phase,
    pub error: Error,
}

impl CliError {
    /// Exit codes: 2 I/O, 3 schema/config, 4 all rows removed,
    /// 5 evaluation failure, 6 tuning failure, 7 artifact version mismatch.
    pub fn exit_code(&self) -> u8 {
        match &self.error {
            Error::Io { .. } | Error::Csv { .. } | Error::EmptyFile { .. } => 2,
            Error::MissingMarkerColumn { .. }
            | Error::HeaderMismatch { .. }
            | Error::SchemaMismatch { .. }
            | Error::UnknownMarkerValue { .. }
            | Error::UnknownFeature { .. }
            | Error::Config { .. } => 3,
            Error::AllRowsRemoved => 4,
            Error::ArtifactVersion { .. } => 7,
            _ => match self.phase {
                Phase::Evaluate => 5,
                Phase::Tune => 6,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.phase.name(), self.error)
    }
}

/// Effective configuration for one subcommand run: the parsed config with
/// seed and output-directory overrides already applied, plus the run
/// metadata stamped into every artifact.
pub struct RunContext {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    pub meta: RunMeta,
}

impl RunContext {
    pub fn new(
        config_path: Option<&Path>,
        seed_override: Option<u64>,
        out_dir_override: Option<PathBuf>,
        phase: Phase,
    ) -> Result<Self, CliError> {
        let wrap = |error| CliError { phase, error };
        let Some(config_path) = config_path else {
            return Err(wrap(Error::Io {
                path: PathBuf::from("--config"),
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "this subcommand needs a --config file",
                ),
            }));
        };
        let mut config = PipelineConfig::from_path(config_path).map_err(wrap)?;
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        if let Some(dir) = out_dir_override {
            config.output_dir = dir;
        } else if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            config.output_dir = PathBuf::from(dir);
        }

        let out_dir = config.output_dir.clone();
        std::fs::create_dir_all(&out_dir).map_err(|source| {
            wrap(Error::Io {
                path: out_dir.clone(),
                source,
            })
        })?;
        let meta = RunMeta {
            config_hash: config.config_hash(),
            seed: config.seed,
        };
        Ok(Self {
            config,
            out_dir,
            meta,
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }
}
