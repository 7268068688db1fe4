//! Scene assessment over a scripted run of per-frame class results, then
//! centroid tracking of detections across a generated frame sequence.

use debris_edge::detection::{assess_scene, segment_detect, track_centroids, SceneState};
use debris_edge::experiments::{generate_frame_sequence, FrameSequenceSpec};
use debris_edge::imaging::{read_pnm_file, FilterParams};

const PLASTIC: usize = 0;
const NOTHING: usize = usize::MAX;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Plastic visible for frames 90-119 and again from 300.
    let results: Vec<usize> = (0..360)
        .map(|f| if (90..120).contains(&f) || f >= 300 { PLASTIC } else { NOTHING })
        .collect();
    let state = assess_scene(&results, PLASTIC, SceneState::default());
    for e in &state.events {
        println!("Incident at {:.2} seconds (frame {}).", e.timestamp, e.frame);
    }

    let dir = std::env::temp_dir().join("debris_edge_incidents");
    let spec = FrameSequenceSpec {
        frames: 60,
        seed: 9,
        ..Default::default()
    };
    generate_frame_sequence(&spec, &dir)?;
    let mut frames = Vec::new();
    for i in 0..spec.frames {
        let img = read_pnm_file(dir.join(format!("frame_{i:05}.pgm")))?;
        frames.push(segment_detect(&img, &FilterParams::default(), 16)?);
    }
    let summary = track_centroids(&frames, 40.0, 3, 30.0);
    for (t, d) in summary.tracks.iter().zip(&summary.durations_s) {
        println!("track {}: frames {}..={}, {d:.2} s", t.id, t.first_frame, t.last_frame);
    }
    Ok(())
}
