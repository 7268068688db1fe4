//! Debris detectors, box post-processing, centroid tracking and the
//! incident assessor.

mod evaluate;
mod nms;
mod scene;
mod segment;
mod sliding;
mod track;

pub use evaluate::{evaluate_detections, DetectionScore, DEFAULT_MATCH_IOU};
pub use nms::{nms, DEFAULT_NMS_IOU};
pub use scene::{assess_scene, IncidentEvent, SceneState, DEFAULT_FPS};
pub use segment::{label_components, segment_detect, Component};
pub use sliding::{sliding_window_detect, WindowScan};
pub use track::{track_centroids, CentroidTracker, Track, TrackSummary};

use serde::{Deserialize, Serialize};

use crate::classifiers::ClassifierError;
use crate::features::FeatureError;
use crate::imaging::{BoundingBox, ImageError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectionError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, DetectionError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub score: f64,
    pub class_index: Option<usize>,
}

impl Detection {
    pub fn new(bbox: BoundingBox, score: f64, class_index: Option<usize>) -> Self {
        Self {
            bbox,
            score,
            class_index,
        }
    }

    /// One JSON line: `{"frame":n,"x":..,"y":..,"w":..,"h":..,"score":..,"class":..}`.
    pub fn to_json_line(&self, frame: usize) -> String {
        serde_json::json!({
            "frame": frame,
            "x": self.bbox.x,
            "y": self.bbox.y,
            "w": self.bbox.w,
            "h": self.bbox.h,
            "score": self.score,
            "class": self.class_index,
        })
        .to_string()
    }
}

/// Serializes per-frame detections as JSON lines, frames numbered from 0.
pub fn detections_to_jsonl(frames: &[Vec<Detection>]) -> String {
    let mut out = String::new();
    for (frame, dets) in frames.iter().enumerate() {
        for d in dets {
            out.push_str(&d.to_json_line(frame));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_line_fields() {
        let d = Detection::new(BoundingBox::new(1, 2, 3, 4), 0.5, Some(2));
        let v: serde_json::Value = serde_json::from_str(&d.to_json_line(7)).unwrap();
        assert_eq!(v["frame"], 7);
        assert_eq!(v["x"], 1);
        assert_eq!(v["h"], 4);
        assert_eq!(v["score"], 0.5);
        assert_eq!(v["class"], 2);
        let none = Detection::new(BoundingBox::new(0, 0, 1, 1), 1.0, None);
        assert!(none.to_json_line(0).contains("\"class\":null"));
    }
}
