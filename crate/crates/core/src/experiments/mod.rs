//! Synthetic data, hyperparameter sweeps, loss statistics and reports.

mod manifest;
mod report;
mod stats;
pub mod svg;
mod sweep;
mod synth;

pub use manifest::{read_manifest, write_manifest, ManifestEntry, MANIFEST_FILE};
pub use report::{render_report, ReportBundle};
pub use stats::{lagged_correlation, loss_stats, LagCorrelation, LossStats};
pub use sweep::{
    derive_seed, run_grid, GridPoint, ImageTask, RunRecord, RunStatus, SweepAxes, SweepConfig, SweepTask,
    TaskOutcome, ToyTask,
};
pub use synth::{
    generate_dataset, generate_frame_sequence, render_blob_frame, render_scene, BlobFrameSpec, FrameSequenceSpec,
    GenSpec, DEFAULT_CLASSES,
};

use crate::imaging::ImageError;
use crate::neuralnet::NetError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("io error: {0}")]
    Io(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("need at least {needed} values, got {found}")]
    TooFew { needed: usize, found: usize },
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Net(#[from] NetError),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io(format!("{}: {e}", path.display()))
}
