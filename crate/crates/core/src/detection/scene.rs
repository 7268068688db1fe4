use serde::{Deserialize, Serialize};

pub const DEFAULT_FPS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidentEvent {
    pub frame: usize,
    pub timestamp: f64,
}

/// Debounced incident log: one event per unbroken run of target frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneState {
    pub incident_flag: bool,
    pub fps: f64,
    pub events: Vec<IncidentEvent>,
    /// Index of the next frame to be observed.
    pub frame: usize,
}

impl Default for SceneState {
    fn default() -> Self {
        Self::new(DEFAULT_FPS)
    }
}

impl SceneState {
    pub fn new(fps: f64) -> Self {
        Self {
            incident_flag: false,
            fps,
            events: Vec::new(),
            frame: 0,
        }
    }

    /// Feeds one frame's class result. Returns the event if one fired.
    pub fn observe(&mut self, result: usize, target: usize) -> Option<IncidentEvent> {
        let frame = self.frame;
        self.frame += 1;
        if result == target && !self.incident_flag {
            let event = IncidentEvent {
                frame,
                timestamp: frame as f64 / self.fps,
            };
            log::info!("Incident at {:.2} seconds.", event.timestamp);
            self.events.push(event);
            self.incident_flag = true;
            Some(event)
        } else {
            if result != target {
                self.incident_flag = false;
            }
            None
        }
    }
}

/// Runs a sequence of per-frame class results through `state`.
pub fn assess_scene(class_results: &[usize], target: usize, mut state: SceneState) -> SceneState {
    for &r in class_results {
        state.observe(r, target);
    }
    state
}
