//! HOG + linear SVM sliding-window detector trained on blob crops versus
//! background patches, then scanned over unseen frames.

use debris_edge::classifiers::{svm_train, LabeledVectors};
use debris_edge::detection::{evaluate_detections, nms, sliding_window_detect, WindowScan};
use debris_edge::experiments::{render_blob_frame, BlobFrameSpec};
use debris_edge::features::{hog_descriptor, HogParams};
use debris_edge::imaging::{crop_replicate, object_scale_normalize, BoundingBox};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW: usize = 32;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BlobFrameSpec::default();
    let hog = HogParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut vectors, mut labels) = (Vec::new(), Vec::new());
    for seed in 0..60 {
        let (frame, boxes) = render_blob_frame(&spec, seed);
        for b in &boxes {
            let crop = object_scale_normalize(&frame, b, 0.6, WINDOW, WINDOW)?;
            vectors.push(hog_descriptor(&crop, &hog)?.values);
            labels.push(1);
        }
        for _ in 0..boxes.len() * 2 {
            let x = rng.gen_range(0..(spec.width - WINDOW) as u32);
            let y = rng.gen_range(0..(spec.height - WINDOW) as u32);
            let patch = BoundingBox::new(x, y, WINDOW as u32, WINDOW as u32);
            if boxes.iter().all(|b| b.intersection(&patch) == 0) {
                let crop = crop_replicate(&frame, x as i64, y as i64, WINDOW, WINDOW)?;
                vectors.push(hog_descriptor(&crop, &hog)?.values);
                labels.push(0);
            }
        }
    }
    let data = LabeledVectors::new(vectors, labels, vec!["background".into(), "blob".into()])?;
    println!("{} training windows", data.len());
    let model = svm_train(&data, 1e-3, 20, 1)?;

    let scan = WindowScan {
        window: (WINDOW, WINDOW),
        stride: 4,
        scales: vec![0.5, 0.75, 1.0],
        score_threshold: 0.5,
        background_class: Some(0),
    };
    for seed in 1000..1005 {
        let (frame, truth) = render_blob_frame(&spec, seed);
        let raw = sliding_window_detect(&frame, &model, &hog, &scan)?;
        let kept = nms(&raw, 0.3);
        let score = evaluate_detections(&kept, &truth, 0.3);
        println!(
            "frame {seed}: {} raw, {} after NMS, {}/{} blobs matched",
            raw.len(),
            kept.len(),
            score.matched,
            truth.len()
        );
    }
    Ok(())
}
