use serde::{Deserialize, Serialize};

use crate::imaging::BoundingBox;

use super::Detection;

pub const DEFAULT_MATCH_IOU: f64 = 0.5;

/// Ratios are `None` when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub matched: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub count_ratio: Option<f64>,
}

/// One-to-one greedy matching by descending IoU. A pair matches when its
/// IoU is at least `iou_match`.
pub fn evaluate_detections(pred: &[Detection], truth: &[BoundingBox], iou_match: f64) -> DetectionScore {
    let mut pairs = Vec::new();
    for (p, d) in pred.iter().enumerate() {
        for (t, b) in truth.iter().enumerate() {
            let iou = d.bbox.iou(b);
            if iou >= iou_match && iou > 0.0 {
                pairs.push((iou, p, t));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pred_used = vec![false; pred.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut matched = 0;
    for (_, p, t) in pairs {
        if !pred_used[p] && !truth_used[t] {
            pred_used[p] = true;
            truth_used[t] = true;
            matched += 1;
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    DetectionScore {
        matched,
        precision: ratio(matched, pred.len()),
        recall: ratio(matched, truth.len()),
        count_ratio: ratio(pred.len(), truth.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_predictions_score_one() {
        let truth = vec![BoundingBox::new(0, 0, 10, 10), BoundingBox::new(30, 30, 5, 8)];
        let pred: Vec<_> = truth.iter().map(|&b| Detection::new(b, 1.0, None)).collect();
        let s = evaluate_detections(&pred, &truth, 0.5);
        assert_eq!((s.precision, s.recall, s.count_ratio), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn no_truth_means_undefined_ratio() {
        let pred = vec![Detection::new(BoundingBox::new(0, 0, 2, 2), 1.0, None); 3];
        let s = evaluate_detections(&pred, &[], 0.5);
        assert_eq!(s.precision, Some(0.0));
        assert_eq!(s.count_ratio, None);
        assert_eq!(s.recall, None);
    }

    #[test]
    fn shifted_box_below_threshold() {
        // 20x20 boxes shifted by 7 px: overlap 13*20 = 260, union 540, IoU ~ 0.481.
        let truth = [BoundingBox::new(0, 0, 20, 20)];
        let pred = [Detection::new(BoundingBox::new(7, 0, 20, 20), 1.0, None)];
        let iou = pred[0].bbox.iou(&truth[0]);
        assert!(iou < 0.5 && iou > 0.45);
        assert_eq!(evaluate_detections(&pred, &truth, 0.5).matched, 0);
        assert_eq!(evaluate_detections(&pred, &truth, 0.45).matched, 1);
    }

    #[test]
    fn each_truth_used_once() {
        let truth = [BoundingBox::new(0, 0, 10, 10)];
        let pred = vec![Detection::new(truth[0], 1.0, None); 2];
        let s = evaluate_detections(&pred, &truth, 0.5);
        assert_eq!(s.matched, 1);
        assert_eq!(s.precision, Some(0.5));
    }
}
