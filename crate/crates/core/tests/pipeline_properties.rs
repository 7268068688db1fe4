use std::path::Path;
use std::process::Command;

use debris_edge::experiments::{generate_frame_sequence, FrameSequenceSpec};
use debris_edge::neuralnet::{build_network, save_weights_file, NetworkSpec};
use debris_edge::runtime::*;
use proptest::prelude::*;

fn frames(dir: &Path, n: usize, seed: u64) {
    let spec = FrameSequenceSpec {
        frames: n,
        seed,
        ..Default::default()
    };
    generate_frame_sequence(&spec, dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_consumed_frame_publishes_one_stats_line(n in 1usize..20, limit in proptest::option::of(1usize..25), t in 1usize..4, b in 1usize..4) {
        let dir = tempfile::tempdir().unwrap();
        frames(dir.path(), n, n as u64);
        let cfg = PipelineConfig {
            frame_source: dir.path().to_path_buf(),
            profile: DeviceProfile::new("p", t, b),
            ..Default::default()
        };
        let pipe = load_pipeline(&cfg).unwrap();
        let mut sink = MemorySink::default();
        let run = run_pipeline(&pipe, &mut sink, limit).unwrap();
        let consumed = limit.map_or(n, |l| l.min(n));
        prop_assert_eq!(run.meters.frames, consumed);
        prop_assert_eq!(run.stats.len(), consumed);
        prop_assert_eq!(sink.on_topic(&cfg.stats_topic).count(), consumed);
        prop_assert_eq!(run.meters.model_load_ms, pipe.model_load_ms());
    }

    #[test]
    fn worker_count_and_batch_leave_output_unchanged(t in 2usize..5, b in 1usize..5, seed in 0u64..1000) {
        let dir = tempfile::tempdir().unwrap();
        frames(dir.path(), 15, seed);
        let mut cfg = PipelineConfig {
            frame_source: dir.path().to_path_buf(),
            ..Default::default()
        };
        let one = run_pipeline(&load_pipeline(&cfg).unwrap(), &mut NullSink::default(), None).unwrap();
        cfg.profile = DeviceProfile::new("many", t, b);
        let many = run_pipeline(&load_pipeline(&cfg).unwrap(), &mut NullSink::default(), None).unwrap();
        prop_assert_eq!(&one.detections, &many.detections);
        prop_assert_eq!(&one.tracks, &many.tracks);
        let counts = |r: &RunSummary| r.stats.iter().map(|s| (s.frame, s.entity_count)).collect::<Vec<_>>();
        prop_assert_eq!(counts(&one), counts(&many));
    }
}

#[test]
fn model_load_time_is_taken_once_before_the_loop() {
    let dir = tempfile::tempdir().unwrap();
    frames(dir.path(), 30, 2);
    let model = dir.path().join("m.wdn");
    save_weights_file(&build_network(&NetworkSpec::default_classifier([32, 32, 1], 3), 4).unwrap(), &model).unwrap();
    let cfg = PipelineConfig {
        frame_source: dir.path().to_path_buf(),
        model_path: Some(model),
        detector: DetectorKind::CnnClassify,
        ..Default::default()
    };
    let pipe = load_pipeline(&cfg).unwrap();
    let short = run_pipeline(&pipe, &mut NullSink::default(), Some(2)).unwrap();
    let long = run_pipeline(&pipe, &mut NullSink::default(), None).unwrap();
    assert!(pipe.model_load_ms() > 0.0);
    assert_eq!(short.meters.model_load_ms, long.meters.model_load_ms);
    assert!(long.meters.total_inference_ms > short.meters.total_inference_ms);
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_debris-edge"))
        .args(args)
        .env("DEBRIS_EDGE_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let none = cli(&[]);
    assert_eq!(none.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&none.stderr).to_lowercase().contains("usage"));
    assert_eq!(cli(&["launch-rockets"]).status.code(), Some(2));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("frames");
    let ok = cli(&["gen-data", "--seed", "3", "--out", out.to_str().unwrap(), "--frames", "4"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(list_frames(&out).unwrap().len(), 4);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"no_such_key\": 1}").unwrap();
    let rejected = cli(&["gen-data", "--out", out.to_str().unwrap(), "--config", bad.to_str().unwrap()]);
    assert_eq!(rejected.status.code(), Some(2));

    let missing = dir.path().join("missing.pgm");
    let failed = cli(&["detect", "--input", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(failed.status.code(), Some(1));
}
