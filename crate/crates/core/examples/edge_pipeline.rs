//! End-to-end frame pipeline: a generated frame sequence is segmented,
//! tracked and published to a broker while a subscriber prints the
//! per-frame stats.

use std::time::Duration;

use debris_edge::experiments::{generate_frame_sequence, FrameSequenceSpec};
use debris_edge::pubsub::{start_broker, Client};
use debris_edge::runtime::{load_pipeline, run_pipeline, BrokerSink, DeviceProfile, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frames = std::env::temp_dir().join("debris_edge_frames");
    let spec = FrameSequenceSpec {
        frames: 90,
        seed: 5,
        ..Default::default()
    };
    generate_frame_sequence(&spec, &frames)?;

    let broker = start_broker("127.0.0.1:0", 1024)?;
    let addr = broker.local_addr().to_string();
    let viewer = Client::connect(&addr)?;
    viewer.subscribe("debris/stats")?;

    let cfg = PipelineConfig {
        frame_source: frames,
        profile: DeviceProfile::new("cpu-2", 2, 1),
        ..Default::default()
    };
    let pipe = load_pipeline(&cfg)?;
    let mut sink = BrokerSink::connect(&addr)?;
    let run = run_pipeline(&pipe, &mut sink, None)?;

    let mut received = 0;
    while let Some(msg) = viewer.recv_timeout(Duration::from_millis(500)) {
        if received % 30 == 0 {
            println!("{}", msg.payload);
        }
        received += 1;
    }
    let m = run.meters;
    println!("{} frames at {:.0} fps, inference {:.1} ms total", m.frames, m.fps, m.total_inference_ms);
    println!("{received} stats messages, {} tracks", run.tracks.tracks.len());
    broker.shutdown();
    Ok(())
}
