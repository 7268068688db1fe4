use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crossbeam_channel::bounded;
use serde::{Deserialize, Serialize};

use super::config::{DetectorKind, PipelineConfig};
use super::telemetry::{FrameStats, TelemetrySink};
use super::{io_err, Result, RuntimeError};
use crate::classifiers::LinearSvmModel;
use crate::detection::{
    nms, segment_detect, sliding_window_detect, CentroidTracker, Detection, IncidentEvent, SceneState,
    TrackSummary,
};
use crate::experiments::read_manifest;
use crate::features::hog_length;
use crate::imaging::{object_scale_normalize, read_pnm_file, BoundingBox, Image};
use crate::neuralnet::{load_weights_file, predict_batch, prepare_input, Network, Tensor};

const FRAME_EXTENSIONS: [&str; 3] = ["pgm", "ppm", "pnm"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerfMeters {
    pub model_load_ms: f64,
    /// Summed per-frame detector time, preprocessing excluded.
    pub total_inference_ms: f64,
    pub preprocess_ms: f64,
    pub frames: usize,
    /// Frames over loop wall-clock seconds.
    pub fps: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub meters: PerfMeters,
    pub stats: Vec<FrameStats>,
    /// `(frame, detections)` for every processed frame, in order.
    pub detections: Vec<(usize, Vec<Detection>)>,
    pub tracks: TrackSummary,
    pub incidents: Vec<IncidentEvent>,
    /// Source positions that could not be decoded or processed.
    pub skipped: Vec<usize>,
    pub telemetry_drops: u64,
}

enum Model {
    None,
    Cnn(Network),
    Svm(LinearSvmModel),
}

/// A validated configuration with its frame list and model in memory.
pub struct Pipeline {
    cfg: PipelineConfig,
    frames: Vec<PathBuf>,
    model: Model,
    model_load_ms: f64,
}

/// Frame files of a directory ordered by the number in their name, or the
/// entries of a manifest in file order.
pub fn list_frames(source: &Path) -> Result<Vec<PathBuf>> {
    if source.is_file() {
        let base = source.parent().unwrap_or(Path::new("."));
        return Ok(read_manifest(source)?.into_iter().map(|e| base.join(e.path)).collect());
    }
    let entries = std::fs::read_dir(source).map_err(|e| io_err(source, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(source, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if ext.is_some_and(|e| FRAME_EXTENSIONS.contains(&e.as_str())) {
            frames.push(path);
        }
    }
    frames.sort_by_cached_key(|p| {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let digits: String = stem.chars().rev().take_while(char::is_ascii_digit).collect();
        let number = digits.chars().rev().collect::<String>().parse::<u64>().ok();
        (number, stem)
    });
    Ok(frames)
}

/// Resolves frames, loads the model (timed) and pushes a probe frame
/// through the chain and the detector's input checks. Nothing is returned
/// unless every step succeeds.
pub fn load_pipeline(cfg: &PipelineConfig) -> Result<Pipeline> {
    cfg.validate()?;
    if !cfg.frame_source.exists() {
        return Err(io_err(&cfg.frame_source, "frame source does not exist"));
    }
    let frames = list_frames(&cfg.frame_source)?;
    let Some(first) = frames.first() else {
        return Err(RuntimeError::NoFrames(cfg.frame_source.display().to_string()));
    };
    if let Some(path) = &cfg.model_path {
        if !path.is_file() {
            return Err(io_err(path, "model file does not exist"));
        }
    }

    let start = Instant::now();
    let model = match (&cfg.model_path, cfg.detector) {
        (None, _) => Model::None,
        (Some(path), DetectorKind::SlidingWindow) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            Model::Svm(LinearSvmModel::from_json(&text)?)
        }
        (Some(path), _) => Model::Cnn(load_weights_file(path, None)?),
    };
    let model_load_ms = start.elapsed().as_secs_f64() * 1e3;

    let probe = read_pnm_file(first)?;
    let mut channels = probe.channels();
    for f in &cfg.preprocessing {
        channels = f.output_channels(channels)?;
    }
    let probe = apply_chain(cfg, &probe)?;
    match &model {
        Model::Cnn(net) => {
            prepare_input(&probe, net.spec().input_shape)?;
        }
        Model::Svm(svm) => {
            let (w, h) = cfg.window.window;
            let dim = hog_length(w, h, &cfg.hog)?;
            if dim != svm.dim() {
                return Err(RuntimeError::Config(format!(
                    "SVM expects {} features, a {w}x{h} window yields {dim}",
                    svm.dim()
                )));
            }
        }
        Model::None => {}
    }
    log::info!(
        "pipeline ready: {} frames, {:?} detector, model loaded in {model_load_ms:.3} ms",
        frames.len(),
        cfg.detector
    );
    Ok(Pipeline {
        cfg: cfg.clone(),
        frames,
        model,
        model_load_ms,
    })
}

fn apply_chain(cfg: &PipelineConfig, img: &Image) -> Result<Image> {
    let mut out = img.clone();
    for f in &cfg.preprocessing {
        out = f.apply(&out)?;
    }
    Ok(out)
}

struct FrameOutcome {
    index: usize,
    result: std::result::Result<FrameResult, String>,
}

struct FrameResult {
    detections: Vec<Detection>,
    inference_ms: f64,
    preprocess_ms: f64,
}

impl Pipeline {
    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn frames(&self) -> &[PathBuf] {
        &self.frames
    }

    pub fn model_load_ms(&self) -> f64 {
        self.model_load_ms
    }

    /// Class probabilities for a set of images, in inference-sized chunks.
    /// Static batching pads the last chunk with zeros.
    fn classify(&self, net: &Network, images: &[Image]) -> Result<Vec<Vec<f32>>> {
        let shape = net.spec().input_shape;
        let settings = &self.cfg.inference;
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(settings.max_batch) {
            let rows = if settings.dynamic_batch_enabled {
                chunk.len()
            } else {
                settings.max_batch
            };
            let row_len = shape.iter().product::<usize>();
            let mut data = Vec::with_capacity(rows * row_len);
            for img in chunk {
                data.extend(prepare_input(img, shape)?);
            }
            data.resize(rows * row_len, 0.0);
            let batch = Tensor::new(vec![rows, shape[0], shape[1], shape[2]], data)?;
            let probs = predict_batch(net, &batch, settings)?;
            out.extend((0..chunk.len()).map(|i| probs.row(i).to_vec()));
        }
        Ok(out)
    }

    fn label(&self, det: &mut Detection, probs: &[f32]) {
        let best = argmax(probs);
        det.class_index = Some(best);
        det.score = f64::from(probs[best]);
    }

    fn keep(&self, det: &Detection) -> bool {
        self.cfg.background_class.is_none() || det.class_index != self.cfg.background_class
    }

    /// Detections for preprocessed frames plus the detector time charged
    /// to each frame.
    fn detect(&self, frames: &[Image]) -> Result<Vec<(Vec<Detection>, f64)>> {
        let cfg = &self.cfg;
        let mut out = Vec::with_capacity(frames.len());
        match (cfg.detector, &self.model) {
            (DetectorKind::CnnClassify, Model::Cnn(net)) => {
                let start = Instant::now();
                let probs = self.classify(net, frames)?;
                let each = start.elapsed().as_secs_f64() * 1e3 / frames.len() as f64;
                for (img, p) in frames.iter().zip(probs) {
                    let bbox = BoundingBox::new(0, 0, img.width() as u32, img.height() as u32);
                    let mut det = Detection::new(bbox, 0.0, None);
                    self.label(&mut det, &p);
                    out.push((vec![det].into_iter().filter(|d| self.keep(d)).collect(), each));
                }
            }
            (DetectorKind::SlidingWindow, Model::Svm(svm)) => {
                for img in frames {
                    let start = Instant::now();
                    let raw = sliding_window_detect(img, svm, &cfg.hog, &cfg.window)?;
                    let dets = nms(&raw, cfg.nms_iou);
                    out.push((dets, start.elapsed().as_secs_f64() * 1e3));
                }
            }
            (DetectorKind::Segment, model) => {
                for img in frames {
                    let start = Instant::now();
                    let mut dets = nms(&segment_detect(img, &cfg.segment.filter, cfg.segment.min_area)?, cfg.nms_iou);
                    if let (Model::Cnn(net), false) = (model, dets.is_empty()) {
                        let [h, w, _] = net.spec().input_shape;
                        let crops = dets
                            .iter()
                            .map(|d| object_scale_normalize(img, &d.bbox, cfg.crop_fraction, w, h))
                            .collect::<std::result::Result<Vec<_>, _>>()?;
                        for (d, p) in dets.iter_mut().zip(self.classify(net, &crops)?) {
                            self.label(d, &p);
                        }
                        dets.retain(|d| self.keep(d));
                    }
                    out.push((dets, start.elapsed().as_secs_f64() * 1e3));
                }
            }
            (kind, _) => {
                return Err(RuntimeError::Config(format!("{kind:?} detector has no usable model")));
            }
        }
        Ok(out)
    }

    /// Decodes, preprocesses and detects one group of frames. Failures are
    /// reported per frame so the run can skip them.
    fn process_group(&self, group: Vec<(usize, std::result::Result<Image, String>)>) -> Vec<FrameOutcome> {
        let mut outcomes = Vec::with_capacity(group.len());
        let mut ready = Vec::new();
        let mut prep = Vec::new();
        for (index, decoded) in group {
            let start = Instant::now();
            match decoded.and_then(|img| apply_chain(&self.cfg, &img).map_err(|e| e.to_string())) {
                Ok(img) => {
                    prep.push(start.elapsed().as_secs_f64() * 1e3);
                    ready.push((index, img));
                }
                Err(e) => outcomes.push(FrameOutcome { index, result: Err(e) }),
            }
        }
        if ready.is_empty() {
            return outcomes;
        }
        let (indices, images): (Vec<usize>, Vec<Image>) = ready.into_iter().unzip();
        match self.detect(&images) {
            Ok(results) => {
                for ((index, (detections, mut inference_ms)), preprocess_ms) in indices.into_iter().zip(results).zip(prep) {
                    if self.cfg.inject_delay_ms > 0 {
                        let start = Instant::now();
                        std::thread::sleep(Duration::from_millis(self.cfg.inject_delay_ms));
                        inference_ms += start.elapsed().as_secs_f64() * 1e3;
                    }
                    outcomes.push(FrameOutcome {
                        index,
                        result: Ok(FrameResult {
                            detections,
                            inference_ms,
                            preprocess_ms,
                        }),
                    });
                }
            }
            Err(e) => outcomes.extend(indices.into_iter().map(|index| FrameOutcome {
                index,
                result: Err(e.to_string()),
            })),
        }
        outcomes
    }
}

fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Runs the staged loop: one decoder thread feeds groups of
/// `profile.batch` frames through a bounded queue to
/// `profile.worker_threads` workers, and this thread collects results in
/// frame order, tracks, assesses and publishes.
pub fn run_pipeline(pipe: &Pipeline, sink: &mut dyn TelemetrySink, limit: Option<usize>) -> Result<RunSummary> {
    let cfg = &pipe.cfg;
    let count = limit.map_or(pipe.frames.len(), |l| l.min(pipe.frames.len()));
    let frames = &pipe.frames[..count];
    let workers = cfg.profile.worker_threads;
    let (group_tx, group_rx) = bounded::<Vec<(usize, std::result::Result<Image, String>)>>(workers * 2);
    let (out_tx, out_rx) = bounded::<FrameOutcome>(workers * cfg.profile.batch * 2);

    let mut tracker = CentroidTracker::new(cfg.tracker.max_dist, cfg.tracker.max_misses, cfg.fps_assumed);
    let mut scene = SceneState::new(cfg.fps_assumed);
    let mut meters = PerfMeters {
        model_load_ms: pipe.model_load_ms,
        ..Default::default()
    };
    let mut stats = Vec::new();
    let mut detections = Vec::new();
    let mut skipped = Vec::new();

    let start = Instant::now();
    std::thread::scope(|s| {
        s.spawn(move || {
            for (chunk_no, chunk) in frames.chunks(cfg.profile.batch).enumerate() {
                let group = chunk
                    .iter()
                    .enumerate()
                    .map(|(i, path)| {
                        let index = chunk_no * cfg.profile.batch + i;
                        (index, read_pnm_file(path).map_err(|e| format!("{}: {e}", path.display())))
                    })
                    .collect();
                if group_tx.send(group).is_err() {
                    break;
                }
            }
        });
        for _ in 0..workers {
            let rx = group_rx.clone();
            let tx = out_tx.clone();
            s.spawn(move || {
                for group in rx {
                    for outcome in pipe.process_group(group) {
                        if tx.send(outcome).is_err() {
                            return;
                        }
                    }
                }
            });
        }
        drop(group_rx);
        drop(out_tx);

        let mut pending = BTreeMap::new();
        let mut next = 0;
        for outcome in out_rx {
            pending.insert(outcome.index, outcome.result);
            while let Some(result) = pending.remove(&next) {
                match result {
                    Ok(r) => {
                        tracker.update(&r.detections);
                        if let Some(target) = cfg.target_class {
                            let hit = r.detections.iter().any(|d| d.class_index.unwrap_or(0) == target);
                            scene.observe(if hit { target } else { usize::MAX }, target);
                        }
                        let frame_stats = FrameStats {
                            frame: next,
                            entity_count: r.detections.len(),
                            inference_ms: r.inference_ms,
                            avg_duration_s: tracker.mean_duration_s(),
                        };
                        sink.publish(&cfg.stats_topic, &frame_stats.to_json());
                        for d in &r.detections {
                            sink.publish(&cfg.detections_topic, &d.to_json_line(next));
                        }
                        meters.total_inference_ms += r.inference_ms;
                        meters.preprocess_ms += r.preprocess_ms;
                        meters.frames += 1;
                        stats.push(frame_stats);
                        detections.push((next, r.detections));
                    }
                    Err(e) => {
                        log::error!("frame {next} skipped: {e}");
                        skipped.push(next);
                    }
                }
                next += 1;
            }
        }
    });
    let wall = start.elapsed().as_secs_f64();
    meters.wall_ms = wall * 1e3;
    meters.fps = if meters.frames > 0 { meters.frames as f64 / wall } else { 0.0 };
    log::debug!(
        "{} frames in {:.1} ms, inference {:.1} ms, preprocessing {:.1} ms",
        meters.frames,
        meters.wall_ms,
        meters.total_inference_ms,
        meters.preprocess_ms
    );
    Ok(RunSummary {
        meters,
        stats,
        detections,
        tracks: tracker.finish(),
        incidents: scene.events,
        skipped,
        telemetry_drops: sink.drops(),
    })
}
