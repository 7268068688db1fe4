//! Frame pipeline: decode, preprocess, detect, track and publish, with
//! performance meters and a device-profile benchmark.

mod bench;
mod config;
mod pipeline;
mod telemetry;

pub use bench::{run_bench, BenchReport, BenchRow, REPEAT_TOLERANCE};
pub use config::{DetectorKind, DeviceProfile, PipelineConfig, SegmentSettings, TrackerSettings};
pub use pipeline::{list_frames, load_pipeline, run_pipeline, PerfMeters, Pipeline, RunSummary};
pub use telemetry::{BrokerSink, FrameStats, MemorySink, NullSink, TelemetrySink};

use crate::classifiers::ClassifierError;
use crate::detection::DetectionError;
use crate::experiments::ExperimentError;
use crate::features::FeatureError;
use crate::imaging::ImageError;
use crate::neuralnet::NetError;
use crate::pubsub::PubSubError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuntimeError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no frames: {0}")]
    NoFrames(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    PubSub(#[from] PubSubError),
}

pub type Result<T> = std::result::Result<T, RuntimeError>;

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> RuntimeError {
    RuntimeError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}
