//! Model load time, total inference time and fps for several device
//! profiles on the same frames, written as CSV and a three-panel SVG.

use debris_edge::experiments::{generate_frame_sequence, FrameSequenceSpec};
use debris_edge::neuralnet::{build_network, save_weights_file, NetworkSpec};
use debris_edge::runtime::{run_bench, DetectorKind, DeviceProfile, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("debris_edge_bench");
    let frames = dir.join("frames");
    generate_frame_sequence(&FrameSequenceSpec { frames: 64, ..Default::default() }, &frames)?;
    let model = dir.join("classifier.wdn");
    save_weights_file(&build_network(&NetworkSpec::default_classifier([64, 64, 1], 6), 1)?, &model)?;

    let cfg = PipelineConfig {
        frame_source: frames,
        model_path: Some(model),
        detector: DetectorKind::CnnClassify,
        ..Default::default()
    };
    let profiles = [
        DeviceProfile::new("cpu-1", 1, 1),
        DeviceProfile::new("cpu-1-batch8", 1, 8),
        DeviceProfile::new("cpu-4", 4, 1),
        DeviceProfile::new("cpu-4-batch8", 4, 8),
        DeviceProfile::new("cpu-1", 1, 1),
    ];
    let report = run_bench(&cfg, &profiles, 64)?;
    print!("{}", report.to_csv());
    for f in &report.flags {
        println!("flag: {f}");
    }
    report.write_to(&dir)?;
    println!("bench.csv and bench.svg in {}", dir.display());
    Ok(())
}
