//! Threshold segmentation on generated blob frames, scored against the
//! generator's boxes.

use debris_edge::detection::{evaluate_detections, nms, segment_detect, DEFAULT_MATCH_IOU, DEFAULT_NMS_IOU};
use debris_edge::experiments::{render_blob_frame, BlobFrameSpec};
use debris_edge::imaging::FilterParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BlobFrameSpec::default();
    let params = FilterParams::default();
    let (mut found, mut total) = (0, 0);
    for seed in 0..50 {
        let (frame, truth) = render_blob_frame(&spec, seed);
        let dets = nms(&segment_detect(&frame, &params, 16)?, DEFAULT_NMS_IOU);
        let score = evaluate_detections(&dets, &truth, DEFAULT_MATCH_IOU);
        found += score.matched;
        total += truth.len();
        if seed < 3 {
            println!("frame {seed}: {} blobs, {} detections, precision {:?}", truth.len(), dets.len(), score.precision);
        }
    }
    println!("recovered {found}/{total} blobs ({:.1}%)", 100.0 * found as f64 / total as f64);
    Ok(())
}
