use super::Detection;

pub const DEFAULT_NMS_IOU: f64 = 0.5;

/// Greedy suppression: visit by descending score (earlier index first on
/// ties), keep a box unless it overlaps an already kept box by more than
/// `iou_threshold`.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    let mut kept: Vec<Detection> = Vec::new();
    for i in order {
        let d = dets[i];
        if kept.iter().all(|k| k.bbox.iou(&d.bbox) <= iou_threshold) {
            kept.push(d);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::BoundingBox;

    fn det(x: u32, y: u32, s: f64) -> Detection {
        Detection::new(BoundingBox::new(x, y, 10, 10), s, None)
    }

    #[test]
    fn identical_boxes_keep_the_best() {
        let kept = nms(&[det(0, 0, 0.8), det(0, 0, 0.9)], 0.5);
        assert_eq!(kept, vec![det(0, 0, 0.9)]);
    }

    #[test]
    fn disjoint_boxes_survive() {
        let dets = [det(0, 0, 0.1), det(20, 0, 0.3), det(0, 20, 0.2)];
        assert_eq!(nms(&dets, 0.5).len(), 3);
    }

    #[test]
    fn equal_scores_keep_the_earlier() {
        let kept = nms(&[det(1, 0, 0.5), det(0, 0, 0.5)], 0.5);
        assert_eq!(kept, vec![det(1, 0, 0.5)]);
    }
}
