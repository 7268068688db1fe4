use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{DeviceProfile, PipelineConfig};
use super::pipeline::{load_pipeline, run_pipeline};
use super::telemetry::NullSink;
use super::{io_err, Result, RuntimeError};
use crate::experiments::svg::bar_panels;

/// Relative fps gap above which two runs of the same profile are flagged.
pub const REPEAT_TOLERANCE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub profile: String,
    pub model_load_ms: f64,
    pub total_inference_ms: f64,
    pub fps: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// One note per pair of same-named profiles whose fps disagree by more
    /// than [`REPEAT_TOLERANCE`].
    pub flags: Vec<String>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("profile,model_load_ms,total_inference_ms,fps\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.3},{:.3},{:.3}\n",
                r.profile, r.model_load_ms, r.total_inference_ms, r.fps
            ));
        }
        out
    }

    /// Three panels, one per metric, one bar per profile run.
    pub fn to_svg(&self) -> String {
        let panel = |f: fn(&BenchRow) -> f64| self.rows.iter().map(|r| (r.profile.clone(), f(r))).collect();
        bar_panels(
            "Device profile comparison",
            &[
                ("Model loading time (ms)".to_string(), panel(|r| r.model_load_ms)),
                ("Total inference time (ms)".to_string(), panel(|r| r.total_inference_ms)),
                ("Frames per second".to_string(), panel(|r| r.fps)),
            ],
        )
    }

    /// Writes `bench.csv` and `bench.svg`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for (name, body) in [("bench.csv", self.to_csv()), ("bench.svg", self.to_svg())] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }
}

/// Loads and runs the pipeline once per profile over the same first
/// `frames` frames, telemetry discarded.
pub fn run_bench(cfg: &PipelineConfig, profiles: &[DeviceProfile], frames: usize) -> Result<BenchReport> {
    if profiles.is_empty() {
        return Err(RuntimeError::Config("bench needs at least one profile".into()));
    }
    if frames == 0 {
        return Err(RuntimeError::NoFrames("bench asked for zero frames".into()));
    }
    let mut rows = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let cfg = PipelineConfig {
            profile: profile.clone(),
            ..cfg.clone()
        };
        let pipe = load_pipeline(&cfg)?;
        if pipe.frames().len() < frames {
            return Err(RuntimeError::NoFrames(format!(
                "bench asked for {frames} frames, source has {}",
                pipe.frames().len()
            )));
        }
        let run = run_pipeline(&pipe, &mut NullSink::default(), Some(frames))?;
        log::info!("profile {}: {:.1} fps", profile.name, run.meters.fps);
        rows.push(BenchRow {
            profile: profile.name.clone(),
            model_load_ms: run.meters.model_load_ms,
            total_inference_ms: run.meters.total_inference_ms,
            fps: run.meters.fps,
            frames: run.meters.frames,
        });
    }
    let flags = repeat_flags(&rows);
    for f in &flags {
        log::error!("{f}");
    }
    Ok(BenchReport { rows, flags })
}

fn repeat_flags(rows: &[BenchRow]) -> Vec<String> {
    let mut flags = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            if a.profile != b.profile {
                continue;
            }
            let gap = (a.fps - b.fps).abs() / a.fps.max(b.fps);
            if gap > REPEAT_TOLERANCE {
                flags.push(format!(
                    "profile {} is not repeatable: {:.2} vs {:.2} fps",
                    a.profile, a.fps, b.fps
                ));
            }
        }
    }
    flags
}
