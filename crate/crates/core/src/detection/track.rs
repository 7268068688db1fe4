use serde::{Deserialize, Serialize};

use super::Detection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    /// `(frame, x, y)` for every frame the track was matched.
    pub centroids: Vec<(usize, f64, f64)>,
    pub first_frame: usize,
    pub last_frame: usize,
    pub misses: usize,
}

impl Track {
    pub fn duration_s(&self, fps: f64) -> f64 {
        (self.last_frame - self.first_frame + 1) as f64 / fps
    }

    fn position(&self) -> (f64, f64) {
        let &(_, x, y) = self.centroids.last().expect("tracks start with a centroid");
        (x, y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSummary {
    pub tracks: Vec<Track>,
    pub durations_s: Vec<f64>,
}

/// Greedy nearest-centroid tracker.
///
/// Each frame, candidate (track, detection) pairs within `max_dist` are
/// taken in order of distance, then track id, then detection index. A
/// track closes once it has gone unmatched for more than `max_misses`
/// consecutive frames.
#[derive(Debug, Clone)]
pub struct CentroidTracker {
    max_dist: f64,
    max_misses: usize,
    fps: f64,
    frame: usize,
    next_id: u64,
    open: Vec<Track>,
    closed: Vec<Track>,
}

impl CentroidTracker {
    pub fn new(max_dist: f64, max_misses: usize, fps: f64) -> Self {
        Self {
            max_dist,
            max_misses,
            fps,
            frame: 0,
            next_id: 0,
            open: Vec::new(),
            closed: Vec::new(),
        }
    }

    pub fn update(&mut self, dets: &[Detection]) {
        let frame = self.frame;
        self.frame += 1;
        let centers: Vec<(f64, f64)> = dets.iter().map(|d| d.bbox.center()).collect();
        let mut pairs = Vec::new();
        for (ti, t) in self.open.iter().enumerate() {
            let (tx, ty) = t.position();
            for (di, &(x, y)) in centers.iter().enumerate() {
                let d = ((x - tx).powi(2) + (y - ty).powi(2)).sqrt();
                if d <= self.max_dist {
                    pairs.push((d, t.id, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.3.cmp(&b.3)));
        let mut track_hit = vec![false; self.open.len()];
        let mut det_used = vec![false; dets.len()];
        for (_, _, ti, di) in pairs {
            if track_hit[ti] || det_used[di] {
                continue;
            }
            track_hit[ti] = true;
            det_used[di] = true;
            let t = &mut self.open[ti];
            t.centroids.push((frame, centers[di].0, centers[di].1));
            t.last_frame = frame;
            t.misses = 0;
        }
        let mut still_open = Vec::with_capacity(self.open.len());
        for (t, hit) in self.open.drain(..).zip(track_hit) {
            let mut t = t;
            if !hit {
                t.misses += 1;
            }
            if t.misses > self.max_misses {
                self.closed.push(t);
            } else {
                still_open.push(t);
            }
        }
        self.open = still_open;
        for (di, used) in det_used.into_iter().enumerate() {
            if !used {
                let (x, y) = centers[di];
                self.open.push(Track {
                    id: self.next_id,
                    centroids: vec![(frame, x, y)],
                    first_frame: frame,
                    last_frame: frame,
                    misses: 0,
                });
                self.next_id += 1;
            }
        }
    }

    pub fn open_tracks(&self) -> &[Track] {
        &self.open
    }

    pub fn closed_tracks(&self) -> &[Track] {
        &self.closed
    }

    /// Mean duration over closed and still-open tracks; 0 before any track.
    pub fn mean_duration_s(&self) -> f64 {
        let all: Vec<f64> = self.closed.iter().chain(&self.open).map(|t| t.duration_s(self.fps)).collect();
        if all.is_empty() {
            0.0
        } else {
            all.iter().sum::<f64>() / all.len() as f64
        }
    }

    /// Closes every open track and returns all tracks ordered by id.
    pub fn finish(mut self) -> TrackSummary {
        self.closed.append(&mut self.open);
        self.closed.sort_by_key(|t| t.id);
        let durations_s = self.closed.iter().map(|t| t.duration_s(self.fps)).collect();
        TrackSummary {
            tracks: self.closed,
            durations_s,
        }
    }
}

pub fn track_centroids(frames: &[Vec<Detection>], max_dist: f64, max_misses: usize, fps: f64) -> TrackSummary {
    let mut tracker = CentroidTracker::new(max_dist, max_misses, fps);
    for dets in frames {
        tracker.update(dets);
    }
    tracker.finish()
}
