//! The processing stage: tracking, regression and rules for one frame at a time.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::rules::{EventType, FrameGeometry, RuleEngine};
use crate::tracker::{Tracker, TrackerError};
use crate::ttc::{horizontal_motion, ttc_from_window, EstimatorConfig};
use crate::types::{BBox, FrameRecord, ObjectClass};

/// Per-track state of one processed frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackAnnotation {
    pub track_id: u64,
    pub class: ObjectClass,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub ttc_h: Option<f64>,
    pub ttc_w: Option<f64>,
    pub omega: Option<f64>,
    pub motion_product: Option<f64>,
    pub size_rule_pass: bool,
    pub motion_rule_pass: bool,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    pub frame_id: u64,
    pub t: f64,
    pub tracks: Vec<TrackAnnotation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trigger {
    pub event_type: EventType,
    pub frame_id: u64,
    pub t: f64,
    pub annotation: TrackAnnotation,
}

/// Tracker, estimators and rule state for a single stream.
#[derive(Debug, Clone)]
pub struct Engine {
    tracker: Tracker,
    rules: RuleEngine,
    estimator: EstimatorConfig,
    geometry: FrameGeometry,
}

impl Engine {
    pub fn new(cfg: &EngineConfig) -> Self {
        Self {
            tracker: Tracker::new(cfg.tracker, cfg.regression.window_capacity()),
            rules: RuleEngine::new(cfg.rules),
            estimator: cfg.regression,
            geometry: cfg.geometry(),
        }
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    pub fn geometry(&self) -> &FrameGeometry {
        &self.geometry
    }

    /// Runs one frame through tracking, estimation and the rules. Only
    /// confirmed tracks matched in this frame are evaluated.
    pub fn process(&mut self, frame: &FrameRecord) -> Result<(FrameAnnotation, Vec<Trigger>), TrackerError> {
        let confirmed = self.tracker.step(frame.t, &frame.detections)?;
        let mut tracks = Vec::with_capacity(confirmed.len());
        let mut triggers = Vec::new();
        for track in confirmed {
            let window = track.window();
            let Some(latest) = window.latest() else { continue };
            let ttc = ttc_from_window(window, self.estimator.size_window_len, self.estimator.slope_epsilon);
            let motion = horizontal_motion(window, self.estimator.center_window_len, self.geometry.c_los, self.geometry.width);
            let decision = self.rules.decide(track.id(), ttc, motion, (latest.cx, latest.by), &self.geometry, frame.t);
            let annotation = TrackAnnotation {
                track_id: track.id(),
                class: track.class(),
                bbox: *track.last_detection(),
                ttc_h: ttc.and_then(|e| e.ttc_h),
                ttc_w: ttc.and_then(|e| e.ttc_w),
                omega: motion.map(|m| m.omega),
                motion_product: decision.motion_product,
                size_rule_pass: decision.size_rule_pass,
                motion_rule_pass: decision.motion_rule_pass,
                triggered: decision.triggered,
            };
            if decision.triggered {
                if let Some(event_type) = EventType::for_target(track.class()) {
                    triggers.push(Trigger { event_type, frame_id: frame.frame_id, t: frame.t, annotation: annotation.clone() });
                }
            }
            tracks.push(annotation);
        }
        let live: HashSet<u64> = self.tracker.tracks().iter().map(|t| t.id()).collect();
        self.rules.retain_tracks(|id| live.contains(&id));
        Ok((FrameAnnotation { frame_id: frame.frame_id, t: frame.t, tracks }, triggers))
    }
}
