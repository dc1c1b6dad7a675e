//! Command-line plumbing for the GenCode pipeline: run configuration,
//! dataset and checkpoint formats, artifact manifests.

pub mod checkpoint;
pub mod dataset;
mod run;

pub use run::{
    execute, replay, AugmentCommand, CliError, CommandConfig, EvalCommand, GenCorpusCommand, Manifest, Method,
    RunConfig, StatsCommand, StudyCommand, TrainCommand, MANIFEST_FILE, TIMINGS_FILE,
};
