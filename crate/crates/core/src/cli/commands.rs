use std::path::{Path, PathBuf};
use std::time::Duration;

use super::{
    io_err, merge_config, BenchArgs, CliError, Command, DetectArgs, EvalArgs, GenDataArgs, PipelineArgs,
    PreprocessArgs, ReportArgs, Result, ServeBrokerArgs, SweepArgs, TrainArgs,
};
use crate::classifiers::{classification_metrics, confusion_matrix, LinearSvmModel};
use crate::detection::{detections_to_jsonl, nms, segment_detect, sliding_window_detect, Detection, WindowScan};
use crate::experiments::{
    generate_dataset, generate_frame_sequence, lagged_correlation, loss_stats, render_blob_frame, render_report,
    run_grid, BlobFrameSpec, FrameSequenceSpec, GenSpec, ImageTask, RunRecord, RunStatus, SweepConfig, ToyTask,
    DEFAULT_CLASSES, MANIFEST_FILE,
};
use crate::features::HogParams;
use crate::imaging::{read_pnm_file, write_pnm_file, Filter, FilterParams, Image, Threshold, DEFAULT_TARGET_FRACTION};
use crate::neuralnet::{
    build_network, evaluate, kfold_evaluate, load_weights_file, save_weights_file, split_dataset, train, Dataset,
    NetworkSpec, OptimizerConfig, SolverKind,
};
use crate::pubsub::{start_broker, DEFAULT_BIND, DEFAULT_QUEUE_CAPACITY};
use crate::runtime::{
    list_frames, load_pipeline, run_bench, run_pipeline, BrokerSink, DetectorKind, DeviceProfile, NullSink,
    PipelineConfig, TelemetrySink,
};

pub(super) fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData(a) => {
            let path = a.common.config.clone();
            gen_data(merge_config(a, path.as_deref())?)
        }
        Command::Preprocess(a) => {
            let path = a.common.config.clone();
            preprocess(merge_config(a, path.as_deref())?)
        }
        Command::Train(a) => {
            let path = a.common.config.clone();
            train_cmd(merge_config(a, path.as_deref())?)
        }
        Command::Eval(a) => {
            let path = a.common.config.clone();
            eval_cmd(merge_config(a, path.as_deref())?)
        }
        Command::Sweep(a) => {
            let path = a.common.config.clone();
            sweep(merge_config(a, path.as_deref())?)
        }
        Command::Detect(a) => {
            let path = a.common.config.clone();
            detect(merge_config(a, path.as_deref())?)
        }
        Command::ServeBroker(a) => {
            let path = a.common.config.clone();
            serve_broker(merge_config(a, path.as_deref())?)
        }
        Command::RunPipeline(a) => pipeline_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => {
            let path = a.common.config.clone();
            report(merge_config(a, path.as_deref())?)
        }
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, body).map_err(|e| io_err(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// A single image file, or every PNM file in a directory in numeric order.
fn input_images(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        Ok(list_frames(input)?)
    } else if input.is_file() {
        Ok(vec![input.to_path_buf()])
    } else {
        Err(io_err(input, "no such file or directory"))
    }
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let out = a.common.out_dir()?;
    let seed = a.common.seed();
    if let Some(frames) = a.frames {
        let spec = FrameSequenceSpec {
            frames,
            width: a.width.unwrap_or(160),
            height: a.height.unwrap_or(120),
            seed,
            ..Default::default()
        };
        let truth = generate_frame_sequence(&spec, &out)?;
        write_file(&out.join("truth.json"), to_json(&truth))?;
        println!("wrote {frames} frames to {}", out.display());
        return Ok(());
    }
    if let Some(count) = a.blob_frames {
        let spec = BlobFrameSpec {
            width: a.width.unwrap_or(160),
            height: a.height.unwrap_or(120),
            ..Default::default()
        };
        create_dir(&out)?;
        let mut truth = Vec::with_capacity(count);
        for i in 0..count {
            let (img, boxes) = render_blob_frame(&spec, seed.wrapping_add(i as u64));
            write_pnm_file(out.join(format!("blob_{i:05}.pgm")), &img)?;
            truth.push(boxes);
        }
        write_file(&out.join("truth.json"), to_json(&truth))?;
        println!("wrote {count} blob frames to {}", out.display());
        return Ok(());
    }
    let classes = a.classes.unwrap_or(DEFAULT_CLASSES.len());
    if classes == 0 || classes > DEFAULT_CLASSES.len() {
        return Err(CliError::Usage(format!("--classes must be 1..={}", DEFAULT_CLASSES.len())));
    }
    let defaults = GenSpec::default();
    let spec = GenSpec {
        classes: DEFAULT_CLASSES[..classes].iter().map(|s| s.to_string()).collect(),
        per_class: a.per_class.unwrap_or(defaults.per_class),
        image_size: (a.width.unwrap_or(defaults.image_size.0), a.height.unwrap_or(defaults.image_size.1)),
        seed,
        ..defaults
    };
    let entries = generate_dataset(&spec, &out)?;
    println!("wrote {} images and {} to {}", entries.len(), MANIFEST_FILE, out.display());
    Ok(())
}

fn parse_op(op: &str) -> Result<Filter> {
    let bad = || CliError::Usage(format!("cannot parse filter step {op:?}"));
    let mut parts = op.split(':');
    let name = parts.next().unwrap_or_default();
    let args: Vec<&str> = parts.collect();
    let num = |i: usize| -> Result<f64> { args.get(i).and_then(|s| s.parse().ok()).ok_or_else(bad) };
    let filter = match (name, args.len()) {
        ("grayscale", 0) => Filter::Grayscale,
        ("negate", 0) => Filter::Negate,
        ("reorder", 0) => Filter::ReorderChannels,
        ("median", 1) => Filter::Median {
            kernel_size: args[0].parse().map_err(|_| bad())?,
        },
        ("gaussian", 1) => Filter::Gaussian { sigma: num(0)? },
        ("threshold", 1) if args[0] == "otsu" => Filter::Threshold {
            threshold: Threshold::Otsu,
        },
        ("threshold", 1) => Filter::Threshold {
            threshold: Threshold::Value(args[0].parse().map_err(|_| bad())?),
        },
        ("contrast", 2) => Filter::ContrastBrightness {
            alpha: num(0)?,
            beta: num(1)?,
        },
        ("resize", 1) => {
            let (w, h) = args[0].split_once('x').ok_or_else(bad)?;
            Filter::Resize {
                width: w.parse().map_err(|_| bad())?,
                height: h.parse().map_err(|_| bad())?,
            }
        }
        _ => return Err(bad()),
    };
    Ok(filter)
}

fn preprocess(a: PreprocessArgs) -> Result<()> {
    let out = a.common.out_dir()?;
    let input = required(a.input, "input")?;
    let mut chain = a.chain.unwrap_or_default();
    for op in a.ops.unwrap_or_default() {
        chain.push(parse_op(&op)?);
    }
    if chain.is_empty() {
        return Err(CliError::Usage("give at least one --op or a chain in --config".into()));
    }
    create_dir(&out)?;
    let files = input_images(&input)?;
    for path in &files {
        let mut img = read_pnm_file(path)?;
        for f in &chain {
            img = f.apply(&img)?;
        }
        let ext = if img.channels() == 1 { "pgm" } else { "ppm" };
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        write_pnm_file(out.join(format!("{stem}.{ext}")), &img)?;
    }
    println!("processed {} images with {} steps into {}", files.len(), chain.len(), out.display());
    Ok(())
}

fn load_dataset(dir: &Path, focus: Option<f64>) -> Result<Dataset> {
    let mut data = Dataset::from_manifest(dir.join(MANIFEST_FILE), None)?;
    let focus = focus.unwrap_or(DEFAULT_TARGET_FRACTION);
    data.focus_fraction = (focus > 0.0).then_some(focus);
    Ok(data)
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let out = a.common.out_dir()?;
    let seed = a.common.seed();
    let data = load_dataset(&required(a.data, "data")?, a.focus)?;
    let solver: SolverKind = a.solver.as_deref().unwrap_or("adam").parse()?;
    let mut opt = match solver {
        SolverKind::Adam => OptimizerConfig::adam(a.lr.unwrap_or(1e-3)),
        SolverKind::Sgd => OptimizerConfig::sgd(a.lr.unwrap_or(0.01), a.momentum.unwrap_or(0.9)),
    };
    opt.max_iters = a.iters.unwrap_or(opt.max_iters);
    opt.batch_size = a.batch.unwrap_or(opt.batch_size);
    opt.eval_interval = a.eval_interval.unwrap_or(opt.eval_interval);
    opt.early_stop_patience = a.patience.unwrap_or(opt.early_stop_patience);
    opt.seed = seed;
    let side = a.input_size.unwrap_or(64);
    let shape = [side, side, 1];
    let spec = NetworkSpec::classifier_with_stem(shape, data.classes(), a.nn_size.unwrap_or(8));
    create_dir(&out)?;

    if let Some(k) = a.kfold {
        let all = data.materialize(shape)?;
        let report = kfold_evaluate(&spec, &all, &opt, k)?;
        write_file(&out.join("kfold.json"), to_json(&report))?;
        println!(
            "{k}-fold accuracy {:.3} +/- {:.3}, loss {:.4} +/- {:.4}",
            report.mean_accuracy, report.sd_accuracy, report.mean_loss, report.sd_loss
        );
        return Ok(());
    }

    let (train_data, test_data) = split_dataset(&data, a.split.unwrap_or(0.7), seed)?;
    let (train_set, test_set) = (train_data.materialize(shape)?, test_data.materialize(shape)?);
    let mut net = build_network(&spec, seed)?;
    let history = train(&mut net, &train_set, &test_set, &opt)?;
    save_weights_file(&net, out.join("model.wdn"))?;
    write_file(&out.join("history.csv"), history.to_csv())?;
    let predicted = net.forward(&test_set.inputs)?.argmax_rows();
    let cm = confusion_matrix(&test_set.labels, &predicted, data.classes())?;
    write_file(&out.join("confusion.csv"), cm.to_csv(&data.class_names))?;
    let last = history.last().copied();
    write_file(
        &out.join("train_summary.json"),
        to_json(&serde_json::json!({
            "solver": solver.name(),
            "train_size": train_set.len(),
            "test_size": test_set.len(),
            "iterations_run": history.iterations_run,
            "stopped_early": history.stopped_early,
            "final": last,
            "class_names": data.class_names,
        })),
    )?;
    if let Some(r) = last {
        println!(
            "{} after {} iterations: train loss {:.4}, test loss {:.4}, test accuracy {:.3}",
            solver.name(),
            history.iterations_run,
            r.train_loss,
            r.test_loss,
            r.test_accuracy
        );
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let out = a.common.out_dir()?;
    let data = load_dataset(&required(a.data, "data")?, a.focus)?;
    let net = load_weights_file(required(a.model, "model")?, None)?;
    let data = match a.split {
        Some(ratio) => split_dataset(&data, ratio, a.common.seed())?.1,
        None => data,
    };
    let set = data.materialize(net.spec().input_shape)?;
    if set.classes != net.classes() {
        return Err(CliError::Usage(format!(
            "model has {} classes, dataset has {}",
            net.classes(),
            set.classes
        )));
    }
    let (loss, accuracy) = evaluate(&net, &set)?;
    let predicted = net.forward(&set.inputs)?.argmax_rows();
    let cm = confusion_matrix(&set.labels, &predicted, set.classes)?;
    create_dir(&out)?;
    write_file(&out.join("confusion.csv"), cm.to_csv(&data.class_names))?;
    let metrics = classification_metrics(&cm)?;
    write_file(
        &out.join("metrics.json"),
        to_json(&serde_json::json!({"samples": set.len(), "loss": loss, "accuracy": accuracy, "metrics": metrics})),
    )?;
    println!("{} samples: loss {loss:.4}, accuracy {accuracy:.3}", set.len());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let out = a.common.out_dir()?;
    let seed = a.common.seed();
    let mut grid = a.grid.unwrap_or_else(|| SweepConfig::reference_grid(seed));
    if a.common.seed.is_some() {
        grid.seed = seed;
    }
    if let Some(iters) = a.iters {
        grid.axes.iters = vec![iters];
    }
    grid.workers = a.workers.unwrap_or(grid.workers);
    grid.trials_per_config = a.trials.unwrap_or(grid.trials_per_config);
    let records = match a.data {
        Some(dir) => {
            let data = load_dataset(&dir, None)?;
            let mut opt = OptimizerConfig::adam(1e-3);
            opt.early_stop_patience = 0;
            run_grid(&grid, &ImageTask::new(data, a.split.unwrap_or(0.7), seed, opt))?
        }
        None => run_grid(&grid, &ToyTask::default())?,
    };
    create_dir(&out)?;
    write_file(&out.join("records.json"), to_json(&records))?;
    write_report(&records, 3, &out)?;
    let ok = records.iter().filter(|r| r.status == RunStatus::Ok).count();
    println!("{} runs ({ok} ok), report in {}", records.len(), out.display());
    Ok(())
}

fn write_report(records: &[RunRecord], max_lag: usize, out: &Path) -> Result<()> {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.status == RunStatus::Ok).collect();
    let test: Vec<f64> = ok.iter().filter_map(|r| r.test_loss).collect();
    let train: Vec<f64> = ok.iter().filter_map(|r| r.train_loss).collect();
    let stats = loss_stats(&test).ok();
    let lag = max_lag.min(test.len().saturating_sub(2));
    let correlations = lagged_correlation(&train, &test, lag).unwrap_or_default();
    render_report(records, stats.as_ref(), &correlations)?.write_to(out)?;
    Ok(())
}

fn detect(a: DetectArgs) -> Result<()> {
    let out = a.common.out_dir()?;
    let files = input_images(&required(a.input, "input")?)?;
    let iou = a.nms_iou.unwrap_or(crate::detection::DEFAULT_NMS_IOU);
    let method = a.method.as_deref().unwrap_or("segment");
    let filter = a.filter.unwrap_or_default();
    let min_area = a.min_area.unwrap_or(16);
    let scan = a.window.unwrap_or_default();
    let model = match method {
        "segment" => None,
        "sliding-window" | "sliding_window" => {
            let path = required(a.model, "model")?;
            let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            Some(LinearSvmModel::from_json(&text)?)
        }
        other => return Err(CliError::Usage(format!("unknown detection method {other:?}"))),
    };
    let hog = HogParams::default();
    let mut frames: Vec<Vec<Detection>> = Vec::with_capacity(files.len());
    for path in &files {
        let img = read_pnm_file(path)?;
        let raw = detect_one(&img, model.as_ref(), &filter, min_area, &hog, &scan)?;
        frames.push(nms(&raw, iou));
    }
    create_dir(&out)?;
    write_file(&out.join("detections.jsonl"), detections_to_jsonl(&frames))?;
    let total: usize = frames.iter().map(Vec::len).sum();
    println!("{total} detections in {} images", files.len());
    Ok(())
}

fn detect_one(
    img: &Image,
    model: Option<&LinearSvmModel>,
    filter: &FilterParams,
    min_area: u64,
    hog: &HogParams,
    scan: &WindowScan,
) -> Result<Vec<Detection>> {
    Ok(match model {
        Some(m) => sliding_window_detect(img, m, hog, scan)?,
        None => segment_detect(img, filter, min_area)?,
    })
}

fn serve_broker(a: ServeBrokerArgs) -> Result<()> {
    let bind = a.bind.as_deref().unwrap_or(DEFAULT_BIND);
    let broker = start_broker(bind, a.capacity.unwrap_or(DEFAULT_QUEUE_CAPACITY))?;
    println!("broker listening on {}", broker.local_addr());
    let Some(secs) = a.duration_s else {
        loop {
            std::thread::sleep(Duration::from_secs(3600));
        }
    };
    std::thread::sleep(Duration::from_secs_f64(secs.max(0.0)));
    let stats = broker.shutdown();
    if let Some(out) = &a.common.out {
        create_dir(out)?;
        write_file(&out.join("broker_stats.json"), to_json(&stats))?;
    }
    println!(
        "routed {} messages, {} drops, {} clients at shutdown",
        stats.messages_routed, stats.drops, stats.clients
    );
    Ok(())
}

fn pipeline_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.common.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(frames) = &a.frames {
        cfg.frame_source = frames.clone();
    }
    if a.model.is_some() {
        cfg.model_path = a.model.clone();
    }
    if let Some(kind) = &a.detector {
        cfg.detector = serde_json::from_value(serde_json::Value::String(kind.replace('-', "_")))
            .map_err(|_| CliError::Usage(format!("unknown detector {kind:?}")))?;
    }
    if let Some(t) = a.threads {
        cfg.profile.worker_threads = t;
    }
    if let Some(b) = a.batch {
        cfg.profile.batch = b;
    }
    if let Some(d) = a.inject_delay_ms {
        cfg.inject_delay_ms = d;
    }
    if cfg.frame_source.as_os_str().is_empty() {
        return Err(CliError::Usage("--frames or frame_source in --config is required".into()));
    }
    if cfg.detector == DetectorKind::Segment && cfg.model_path.is_none() {
        log::info!("segment detector without a model: blobs stay unlabeled");
    }
    Ok(cfg)
}

fn pipeline_cmd(a: PipelineArgs) -> Result<()> {
    let cfg = pipeline_config(&a)?;
    let pipe = load_pipeline(&cfg)?;
    let mut sink: Box<dyn TelemetrySink> = match &a.broker {
        Some(addr) => Box::new(BrokerSink::connect(addr)?),
        None => Box::new(NullSink::default()),
    };
    let run = run_pipeline(&pipe, sink.as_mut(), a.limit)?;
    if let Some(out) = &a.common.out {
        create_dir(out)?;
        write_file(&out.join("meters.json"), to_json(&run.meters))?;
        let stats: String = run.stats.iter().map(|s| s.to_json() + "\n").collect();
        write_file(&out.join("stats.jsonl"), stats)?;
        let dets: String = run
            .detections
            .iter()
            .flat_map(|(frame, ds)| ds.iter().map(move |d| d.to_json_line(*frame) + "\n"))
            .collect();
        write_file(&out.join("detections.jsonl"), dets)?;
        write_file(&out.join("tracks.json"), to_json(&run.tracks))?;
        write_file(&out.join("incidents.json"), to_json(&run.incidents))?;
    }
    let m = run.meters;
    println!(
        "{} frames at {:.1} fps; model load {:.2} ms, inference {:.1} ms total; {} skipped, {} telemetry drops",
        m.frames,
        m.fps,
        m.model_load_ms,
        m.total_inference_ms,
        run.skipped.len(),
        run.telemetry_drops
    );
    for e in &run.incidents {
        println!("Incident at {:.2} seconds.", e.timestamp);
    }
    Ok(())
}

fn parse_profiles(text: &str) -> Result<Vec<DeviceProfile>> {
    text.split(',')
        .map(|p| {
            let parts: Vec<&str> = p.trim().split(':').collect();
            match parts.as_slice() {
                [name, threads, batch] => Ok(DeviceProfile::new(
                    name,
                    threads.parse().map_err(|_| CliError::Usage(format!("bad thread count in {p:?}")))?,
                    batch.parse().map_err(|_| CliError::Usage(format!("bad batch in {p:?}")))?,
                )),
                _ => Err(CliError::Usage(format!("profile {p:?} is not NAME:THREADS:BATCH"))),
            }
        })
        .collect()
}

fn bench(a: BenchArgs) -> Result<()> {
    let out = a.pipeline.common.out_dir()?;
    let cfg = pipeline_config(&a.pipeline)?;
    let profiles = parse_profiles(a.profiles.as_deref().unwrap_or("cpu-1:1:1,cpu-4:4:4"))?;
    let available = list_frames(&cfg.frame_source)?.len();
    let frames = a.bench_frames.or(a.pipeline.limit).unwrap_or(available);
    let report = run_bench(&cfg, &profiles, frames)?;
    report.write_to(&out)?;
    write_file(&out.join("bench.json"), to_json(&report))?;
    print!("{}", report.to_csv());
    for f in &report.flags {
        println!("warning: {f}");
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let out = a.common.out_dir()?;
    let max_lag = a.max_lag.unwrap_or(3);
    if let Some(path) = a.records {
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let records: Vec<RunRecord> =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        write_report(&records, max_lag, &out)?;
        println!("report for {} runs in {}", records.len(), out.display());
        return Ok(());
    }
    let losses: Vec<f64> = required(a.losses, "records or --losses")?
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| CliError::Usage(format!("bad loss value {s:?}"))))
        .collect::<Result<_>>()?;
    let s = loss_stats(&losses)?;
    let spread = s.spread.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"));
    let csv = format!(
        "Mean,{:.6}\nMedian,{:.6}\nSD,{:.6}\nMin,{:.6}\nMax,{:.6}\nRange,{:.6}\n(Mean-Min)/SD,{spread}\n",
        s.mean, s.median, s.sd, s.min, s.max, s.range
    );
    create_dir(&out)?;
    write_file(&out.join("loss_stats.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_steps_parse() {
        assert_eq!(parse_op("median:3").unwrap(), Filter::Median { kernel_size: 3 });
        assert_eq!(
            parse_op("threshold:otsu").unwrap(),
            Filter::Threshold {
                threshold: Threshold::Otsu
            }
        );
        assert_eq!(parse_op("resize:64x32").unwrap(), Filter::Resize { width: 64, height: 32 });
        assert!(parse_op("median").is_err());
        assert!(parse_op("sharpen:2").is_err());
    }

    #[test]
    fn profiles_parse() {
        let p = parse_profiles("a:1:1, b:4:8").unwrap();
        assert_eq!(p[1], DeviceProfile::new("b", 4, 8));
        assert!(parse_profiles("a:1").is_err());
    }
}
