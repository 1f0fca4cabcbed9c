//! SORT-style online multi-object tracker.
//!
//! Each frame: predict every track forward by the real time step, assign
//! detections by maximum total IoU (same class only), correct matched tracks,
//! spawn tentative tracks from leftovers, and retire tracks that have gone
//! `max_age` frames without a match. Matched detections also feed the track's
//! regression window.

pub mod assignment;
pub mod kalman;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ttc::{Sample, SampleWindow};
use crate::types::{BBox, Detection, ObjectClass};

pub use assignment::{associate, max_weight_assignment, Association};
pub use kalman::{BoxFilter, KalmanConfig};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TrackerError {
    #[error("frame at t={t} is not after the previous frame at t={last}")]
    NonMonotonicTimestamp { t: f64, last: f64 },
    #[error("frame timestamp is not finite")]
    NonFiniteTimestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub confidence_min: f64,
    pub iou_min: f64,
    pub max_age: u32,
    pub min_hits: u32,
    pub kalman: KalmanConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { confidence_min: 0.4, iou_min: 0.3, max_age: 5, min_hits: 3, kalman: KalmanConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Track {
    id: u64,
    class: ObjectClass,
    filter: BoxFilter,
    hits: u32,
    age: u32,
    time_since_update: u32,
    last_detection: BBox,
    window: SampleWindow,
}

impl Track {
    fn new(id: u64, det: &Detection, cfg: &TrackerConfig, window_capacity: usize) -> Self {
        let mut window = SampleWindow::new(window_capacity);
        push_sample(&mut window, det);
        Self {
            id,
            class: det.class,
            filter: BoxFilter::new(&det.bbox, cfg.kalman),
            hits: 1,
            age: 0,
            time_since_update: 0,
            last_detection: det.bbox,
            window,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn class(&self) -> ObjectClass {
        self.class
    }

    pub fn hits(&self) -> u32 {
        self.hits
    }

    /// Frames since creation.
    pub fn age(&self) -> u32 {
        self.age
    }

    pub fn time_since_update(&self) -> u32 {
        self.time_since_update
    }

    pub fn filter(&self) -> &BoxFilter {
        &self.filter
    }

    pub fn filter_mut(&mut self) -> &mut BoxFilter {
        &mut self.filter
    }

    /// Filtered box estimate.
    pub fn bbox(&self) -> Option<BBox> {
        self.filter.bbox()
    }

    /// Raw detection box of the latest match.
    pub fn last_detection(&self) -> &BBox {
        &self.last_detection
    }

    pub fn window(&self) -> &SampleWindow {
        &self.window
    }

    /// Advances the state by `dt` seconds and returns the predicted box.
    pub fn predict(&mut self, dt: f64) -> Option<BBox> {
        self.filter.predict(dt)
    }
}

fn push_sample(window: &mut SampleWindow, det: &Detection) {
    let b = &det.bbox;
    let sample = Sample { t: det.t, h: b.height(), w: b.width(), cx: b.center_x(), by: b.bottom() };
    if let Err(e) = window.push(sample) {
        tracing::warn!("dropping regression sample: {e}");
    }
}

#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    window_capacity: usize,
    tracks: Vec<Track>,
    next_id: u64,
    last_t: Option<f64>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig, window_capacity: usize) -> Self {
        Self { cfg, window_capacity, tracks: Vec::new(), next_id: 1, last_t: None }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// All live tracks, confirmed or not.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn track(&self, id: u64) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// Processes one frame and returns the confirmed tracks matched in it.
    ///
    /// A rejected frame (non-increasing timestamp) leaves the tracker untouched.
    pub fn step(&mut self, t: f64, detections: &[Detection]) -> Result<Vec<&Track>, TrackerError> {
        if !t.is_finite() {
            return Err(TrackerError::NonFiniteTimestamp);
        }
        let dt = match self.last_t {
            Some(last) if t <= last => return Err(TrackerError::NonMonotonicTimestamp { t, last }),
            Some(last) => t - last,
            None => 0.0,
        };
        self.last_t = Some(t);

        let kept: Vec<Detection> = detections
            .iter()
            .filter(|d| d.class.is_road_user() && d.confidence >= self.cfg.confidence_min && d.bbox.is_valid())
            .map(|d| Detection { t, ..*d })
            .collect();

        let mut predicted = Vec::with_capacity(self.tracks.len());
        self.tracks.retain_mut(|track| {
            track.age += 1;
            track.time_since_update += 1;
            match track.predict(dt) {
                Some(b) => {
                    predicted.push((b, track.class));
                    true
                }
                None => false,
            }
        });

        let assoc = associate(&predicted, &kept, self.cfg.iou_min);
        for &(ti, di) in &assoc.matches {
            let track = &mut self.tracks[ti];
            let det = &kept[di];
            track.filter.update(&det.bbox);
            track.hits += 1;
            track.time_since_update = 0;
            track.last_detection = det.bbox;
            push_sample(&mut track.window, det);
        }
        for &di in &assoc.unmatched_detections {
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(Track::new(id, &kept[di], &self.cfg, self.window_capacity));
        }
        let max_age = self.cfg.max_age;
        self.tracks.retain(|track| track.time_since_update <= max_age);

        let min_hits = self.cfg.min_hits;
        Ok(self.tracks.iter().filter(|tr| tr.time_since_update == 0 && tr.hits >= min_hits).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(t: f64, class: ObjectClass, b: BBox) -> Detection {
        Detection { t, frame_id: 0, class, confidence: 0.9, bbox: b }
    }

    #[test]
    fn empty_frames_never_confirm() {
        let mut tr = Tracker::new(TrackerConfig::default(), 18);
        for k in 0..50 {
            assert!(tr.step(k as f64 / 24.0, &[]).unwrap().is_empty());
        }
        assert!(tr.tracks().is_empty());
    }

    #[test]
    fn non_monotonic_frames_are_rejected() {
        let mut tr = Tracker::new(TrackerConfig::default(), 18);
        tr.step(1.0, &[]).unwrap();
        assert_eq!(tr.step(1.0, &[]).unwrap_err(), TrackerError::NonMonotonicTimestamp { t: 1.0, last: 1.0 });
        assert!(tr.step(0.5, &[]).is_err());
        assert!(tr.step(1.1, &[]).is_ok());
    }

    #[test]
    fn low_confidence_and_other_classes_are_dropped() {
        let mut tr = Tracker::new(TrackerConfig::default(), 18);
        let b = BBox::new(0.0, 0.0, 10.0, 10.0);
        let mut weak = det(0.0, ObjectClass::Vehicle, b);
        weak.confidence = 0.2;
        tr.step(0.0, &[weak, det(0.0, ObjectClass::Other, b)]).unwrap();
        assert!(tr.tracks().is_empty());
    }

    #[test]
    fn lifecycle_confirms_after_min_hits_and_expires_after_max_age() {
        let mut tr = Tracker::new(TrackerConfig::default(), 18);
        let b = BBox::new(100.0, 100.0, 150.0, 140.0);
        let mut confirmed_at = Vec::new();
        for k in 0..5 {
            let t = k as f64 / 24.0;
            let out = tr.step(t, &[det(t, ObjectClass::Vehicle, b)]).unwrap();
            if !out.is_empty() {
                confirmed_at.push(k);
            }
        }
        assert_eq!(confirmed_at, vec![2, 3, 4]);
        let id = tr.tracks()[0].id();
        for k in 5..10 {
            tr.step(k as f64 / 24.0, &[]).unwrap();
            assert_eq!(tr.tracks().len(), 1, "track should coast at frame {k}");
        }
        tr.step(10.0 / 24.0, &[]).unwrap();
        assert!(tr.track(id).is_none());
    }

    #[test]
    fn window_fills_on_matches_only() {
        let mut tr = Tracker::new(TrackerConfig::default(), 18);
        let b = BBox::new(100.0, 100.0, 150.0, 140.0);
        tr.step(0.0, &[det(0.0, ObjectClass::Vehicle, b)]).unwrap();
        tr.step(0.1, &[det(0.1, ObjectClass::Vehicle, b)]).unwrap();
        tr.step(0.2, &[]).unwrap();
        tr.step(0.3, &[det(0.3, ObjectClass::Vehicle, b)]).unwrap();
        let ts: Vec<f64> = tr.tracks()[0].window().iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.1, 0.3]);
    }
}
