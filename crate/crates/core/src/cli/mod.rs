//! Command-line front end.
//!
//! Every subcommand takes `--seed`, `--out` and `--config <file.json>`.
//! A config file supplies values for flags that were not given on the
//! command line, keyed by the flag's long name with `_` for `-`. For
//! `run-pipeline` and `bench` the file is a whole pipeline configuration.

mod commands;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierError;
use crate::detection::DetectionError;
use crate::experiments::ExperimentError;
use crate::features::FeatureError;
use crate::imaging::{Filter, FilterParams, ImageError};
use crate::neuralnet::NetError;
use crate::pubsub::PubSubError;
use crate::runtime::RuntimeError;

pub const LOG_ENV: &str = "DEBRIS_EDGE_LOG";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    PubSub(#[from] PubSubError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Parser, Debug)]
#[command(name = "debris-edge", version, about = "Floating debris detection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic labeled corpus, a moving-object frame sequence or blob frames
    GenData(GenDataArgs),
    /// Apply a filter chain to an image or a directory of images
    Preprocess(PreprocessArgs),
    /// Train the CNN classifier on a manifest dataset
    Train(TrainArgs),
    /// Score a saved CNN on a manifest dataset
    Eval(EvalArgs),
    /// Run a hyperparameter grid and write the sweep report
    Sweep(SweepArgs),
    /// Detect objects in an image or a directory of images
    Detect(DetectArgs),
    /// Run the publish/subscribe broker
    ServeBroker(ServeBrokerArgs),
    /// Run the frame pipeline and publish per-frame stats
    RunPipeline(PipelineArgs),
    /// Compare device profiles on the same frames
    Bench(BenchArgs),
    /// Render loss statistics and charts from sweep records or a loss list
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct Common {
    /// Base seed for every random choice [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with values for flags not given on the command line
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Common {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        self.out.clone().ok_or_else(|| CliError::Usage("--out is required".into()))
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct GenDataArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Number of classes, taken from the built-in list [default: 6]
    #[arg(long)]
    pub classes: Option<usize>,
    /// Images per class [default: 50]
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Image width [default: 400]
    #[arg(long)]
    pub width: Option<usize>,
    /// Image height [default: 500]
    #[arg(long)]
    pub height: Option<usize>,
    /// Write a moving-object sequence of this many frames instead
    #[arg(long, conflicts_with = "blob_frames")]
    pub frames: Option<usize>,
    /// Write this many independent blob frames with ground truth instead
    #[arg(long)]
    pub blob_frames: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct PreprocessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Image file or directory of PNM images
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Filter step, repeatable, applied in order: grayscale, negate,
    /// reorder, median:K, gaussian:SIGMA, threshold:otsu|T,
    /// contrast:ALPHA:BETA, resize:WxH
    #[arg(long = "op")]
    pub ops: Option<Vec<String>>,
    /// Filter chain as JSON objects (config file only)
    #[arg(skip)]
    pub chain: Option<Vec<Filter>>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Dataset directory holding manifest.jsonl
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Training fraction [default: 0.7]
    #[arg(long)]
    pub split: Option<f64>,
    /// adam or sgd [default: adam]
    #[arg(long)]
    pub solver: Option<String>,
    /// Training iterations [default: 2000]
    #[arg(long)]
    pub iters: Option<usize>,
    /// Learning rate [default: 0.001 for adam, 0.01 for sgd]
    #[arg(long)]
    pub lr: Option<f64>,
    /// SGD momentum [default: 0.9]
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    pub batch: Option<usize>,
    /// Square input side in pixels [default: 64]
    #[arg(long)]
    pub input_size: Option<usize>,
    /// First convolution width [default: 8]
    #[arg(long)]
    pub nn_size: Option<usize>,
    /// Fraction of the crop filled by the labeled object; 0 uses whole images [default: 0.6]
    #[arg(long)]
    pub focus: Option<f64>,
    /// Iterations between evaluations [default: 100]
    #[arg(long)]
    pub eval_interval: Option<usize>,
    /// Non-improving evaluations before stopping, 0 disables [default: 5]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Run k-fold cross-validation instead of a single split
    #[arg(long)]
    pub kfold: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Dataset directory holding manifest.jsonl
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Weight file written by train
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Score only the held-out part of this split (same seed as train)
    #[arg(long)]
    pub split: Option<f64>,
    /// Object fill fraction, 0 for whole images [default: 0.6]
    #[arg(long)]
    pub focus: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Image dataset directory; without it a Gaussian toy task is swept
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Training fraction for image data [default: 0.7]
    #[arg(long)]
    pub split: Option<f64>,
    /// Replace the iterations axis with this single value
    #[arg(long)]
    pub iters: Option<usize>,
    /// Concurrent runs [default: 1]
    #[arg(long)]
    pub workers: Option<usize>,
    /// Trials per grid point [default: 1]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Grid definition (config file only); defaults to the ten-row reference grid
    #[arg(skip)]
    pub grid: Option<crate::experiments::SweepConfig>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct DetectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Image file or directory of PNM images
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// segment or sliding-window [default: segment]
    #[arg(long)]
    pub method: Option<String>,
    /// SVM model JSON for sliding-window
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Smallest blob area kept by segmentation [default: 16]
    #[arg(long)]
    pub min_area: Option<u64>,
    /// Suppression overlap [default: 0.5]
    #[arg(long)]
    pub nms_iou: Option<f64>,
    /// Segmentation filter settings (config file only)
    #[arg(skip)]
    pub filter: Option<FilterParams>,
    /// Window scan settings (config file only)
    #[arg(skip)]
    pub window: Option<crate::detection::WindowScan>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ServeBrokerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Listen address [default: 127.0.0.1:1883]
    #[arg(long)]
    pub bind: Option<String>,
    /// Per-client outbound queue length [default: 1024]
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Stop after this many seconds and write stats; runs until killed otherwise
    #[arg(long)]
    pub duration_s: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: Common,
    /// Frame directory or manifest
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Model file
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// segment, sliding_window or cnn_classify
    #[arg(long)]
    pub detector: Option<String>,
    /// Broker address; telemetry is discarded without one
    #[arg(long)]
    pub broker: Option<String>,
    /// Stop after this many frames
    #[arg(long)]
    pub limit: Option<usize>,
    /// Inference worker threads
    #[arg(long)]
    pub threads: Option<usize>,
    /// Frames per inference call
    #[arg(long)]
    pub batch: Option<usize>,
    /// Artificial per-frame delay in milliseconds
    #[arg(long)]
    pub inject_delay_ms: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct BenchArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Comma-separated NAME:THREADS:BATCH profiles [default: cpu-1:1:1,cpu-4:4:4]
    #[arg(long)]
    pub profiles: Option<String>,
    /// Frames per profile [default: all]
    #[arg(long = "bench-frames")]
    pub bench_frames: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// records.json written by sweep
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Comma-separated test losses, used when no records are given
    #[arg(long)]
    pub losses: Option<String>,
    /// Largest lag for the train/test correlation table [default: 3]
    #[arg(long)]
    pub max_lag: Option<usize>,
}

/// Fills unset fields of `cli` from the JSON object in `config`. Keys that
/// do not name a field are rejected.
pub fn merge_config<T: Serialize + DeserializeOwned>(cli: T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(cli);
    };
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(mut merged) = file else {
        return Err(CliError::Usage(format!("{}: expected a JSON object", path.display())));
    };
    let serde_json::Value::Object(given) = serde_json::to_value(&cli).expect("arguments serialize") else {
        unreachable!("argument structs serialize to objects");
    };
    if let Some(key) = merged.keys().find(|k| !given.contains_key(*k)) {
        return Err(CliError::Usage(format!("{}: unknown key {key:?}", path.display())));
    }
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(serde_json::Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn init_logging() {
    let level = std::env::var(LOG_ENV).unwrap_or_else(|_| "error".into());
    let filter = match level.as_str() {
        "error" | "info" | "debug" => level.clone(),
        _ => "error".to_string(),
    };
    let _ = env_logger::Builder::new().parse_filters(&filter).format_target(false).try_init();
    if filter != level {
        log::error!("{LOG_ENV}={level:?} is not one of error, info, debug; using error");
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns
/// the process exit code: 0 on success, 2 on usage errors, 1 otherwise.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    match commands::run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run with --help for usage");
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_args_and_unknown_subcommand_exit_2() {
        assert_eq!(dispatch(["debris-edge"]), 2);
        assert_eq!(dispatch(["debris-edge", "frobnicate"]), 2);
        assert_eq!(dispatch(["debris-edge", "train", "--bogus"]), 2);
        assert_eq!(dispatch(["debris-edge", "--help"]), 0);
    }

    #[test]
    fn config_fills_unset_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"iters": 50, "solver": "sgd", "seed": 3}"#).unwrap();
        let cli = TrainArgs {
            iters: Some(10),
            ..Default::default()
        };
        let merged = merge_config(cli, Some(&path)).unwrap();
        assert_eq!(merged.iters, Some(10));
        assert_eq!(merged.solver.as_deref(), Some("sgd"));
        assert_eq!(merged.common.seed, Some(3));

        std::fs::write(&path, r#"{"iterz": 50}"#).unwrap();
        assert!(matches!(merge_config(TrainArgs::default(), Some(&path)), Err(CliError::Usage(_))));
    }
}
