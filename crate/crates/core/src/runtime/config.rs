use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{io_err, Result, RuntimeError};
use crate::detection::{WindowScan, DEFAULT_FPS, DEFAULT_NMS_IOU};
use crate::features::HogParams;
use crate::imaging::{Filter, FilterParams};
use crate::neuralnet::InferenceSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Threshold segmentation; an optional CNN labels each blob.
    Segment,
    /// HOG + linear SVM over a window pyramid. Needs an SVM model file.
    SlidingWindow,
    /// Whole-frame CNN classification. Needs a weight file.
    CnnClassify,
}

/// Abstract execution target: how many inference workers and how many
/// frames each inference call carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    pub worker_threads: usize,
    pub batch: usize,
}

impl Default for DeviceProfile {
    fn default() -> Self {
        Self::new("cpu-1", 1, 1)
    }
}

impl DeviceProfile {
    pub fn new(name: &str, worker_threads: usize, batch: usize) -> Self {
        Self {
            name: name.to_string(),
            worker_threads,
            batch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.worker_threads == 0 || self.batch == 0 {
            return Err(RuntimeError::Config(format!(
                "profile {:?} needs at least one worker and a batch of at least one",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentSettings {
    pub filter: FilterParams,
    pub min_area: u64,
}

impl Default for SegmentSettings {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            min_area: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerSettings {
    pub max_dist: f64,
    pub max_misses: usize,
}

impl Default for TrackerSettings {
    fn default() -> Self {
        Self {
            max_dist: 40.0,
            max_misses: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Directory of numbered PNM frames, or a manifest file.
    pub frame_source: PathBuf,
    /// Weight file for CNN stages, or SVM JSON for the sliding window.
    pub model_path: Option<PathBuf>,
    pub detector: DetectorKind,
    pub preprocessing: Vec<Filter>,
    pub fps_assumed: f64,
    pub stats_topic: String,
    pub detections_topic: String,
    pub inference: InferenceSettings,
    pub segment: SegmentSettings,
    pub window: WindowScan,
    pub hog: HogParams,
    pub nms_iou: f64,
    pub tracker: TrackerSettings,
    /// Class index that raises incidents, if any.
    pub target_class: Option<usize>,
    /// Detections of this class are discarded.
    pub background_class: Option<usize>,
    /// Object fill fraction used when cropping blobs for the CNN.
    pub crop_fraction: f64,
    /// Artificial per-frame inference delay, for meter calibration.
    pub inject_delay_ms: u64,
    pub profile: DeviceProfile,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            frame_source: PathBuf::new(),
            model_path: None,
            detector: DetectorKind::Segment,
            preprocessing: Vec::new(),
            fps_assumed: DEFAULT_FPS,
            stats_topic: "debris/stats".into(),
            detections_topic: "debris/detections".into(),
            inference: InferenceSettings::default(),
            segment: SegmentSettings::default(),
            window: WindowScan::default(),
            hog: HogParams::default(),
            nms_iou: DEFAULT_NMS_IOU,
            tracker: TrackerSettings::default(),
            target_class: None,
            background_class: None,
            crop_fraction: crate::imaging::DEFAULT_TARGET_FRACTION,
            inject_delay_ms: 0,
            profile: DeviceProfile::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| RuntimeError::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }

    /// Checks everything that does not need the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if !(self.fps_assumed.is_finite() && self.fps_assumed > 0.0) {
            return Err(RuntimeError::Config(format!("fps_assumed {}", self.fps_assumed)));
        }
        if !(0.0..=1.0).contains(&self.nms_iou) {
            return Err(RuntimeError::Config(format!("nms_iou {}", self.nms_iou)));
        }
        if self.inference.max_batch == 0 {
            return Err(RuntimeError::Config("inference.max_batch must be at least 1".into()));
        }
        if !(self.crop_fraction > 0.0 && self.crop_fraction <= 1.0) {
            return Err(RuntimeError::Config(format!("crop_fraction {}", self.crop_fraction)));
        }
        for topic in [&self.stats_topic, &self.detections_topic] {
            crate::pubsub::validate_topic(topic)?;
        }
        self.segment.filter.validate()?;
        if self.detector != DetectorKind::Segment && self.model_path.is_none() {
            return Err(RuntimeError::Config(format!("{:?} detector needs model_path", self.detector)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_defaults() {
        let cfg: PipelineConfig = PipelineConfig::from_json(
            r#"{"frame_source": "frames", "preprocessing": [{"op": "grayscale"}, {"op": "median", "kernel_size": 3}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.fps_assumed, 30.0);
        assert_eq!(cfg.preprocessing.len(), 2);
        let back = PipelineConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_profiles_and_missing_models() {
        let mut cfg = PipelineConfig::default();
        cfg.profile.worker_threads = 0;
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            detector: DetectorKind::CnnClassify,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(RuntimeError::Config(_))));
        assert!(PipelineConfig::from_json(r#"{"detector": "hough"}"#).is_err());
    }
}
