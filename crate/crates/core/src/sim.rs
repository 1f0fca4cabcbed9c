//! Pinhole-camera scenario simulator.
//!
//! Actors move at constant velocity relative to a forward-facing camera. Each
//! frame projects every actor through the pinhole model, optionally perturbs the
//! box edges with seeded Gaussian noise, and clips to the frame. The same
//! kinematics provide the analytic time-to-collision and the ground-truth
//! near-crash labels used to score the engine.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{BBox, Detection, FrameRecord, ObjectClass};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("scenario has no actors")]
    NoActors,
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::Invalid { field: field.into(), message: message.into() }
}

fn default_mount_height() -> f64 {
    1.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub focal_px: f64,
    pub frame_width: f64,
    pub frame_height: f64,
    pub fps: f64,
    /// Defaults to `frame_width / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal_x: Option<f64>,
    /// Image row of the horizon. Defaults to `frame_height / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal_y: Option<f64>,
    /// Camera height above the road in meters; places the box bottom.
    #[serde(default = "default_mount_height")]
    pub mount_height: f64,
}

impl CameraSpec {
    pub fn new(focal_px: f64, frame_width: f64, frame_height: f64, fps: f64) -> Self {
        Self {
            focal_px,
            frame_width,
            frame_height,
            fps,
            principal_x: None,
            principal_y: None,
            mount_height: default_mount_height(),
        }
    }

    pub fn principal_x(&self) -> f64 {
        self.principal_x.unwrap_or(self.frame_width / 2.0)
    }

    pub fn principal_y(&self) -> f64 {
        self.principal_y.unwrap_or(self.frame_height / 2.0)
    }

    /// Same optics with focal length, frame and principal point scaled by `k`.
    pub fn scaled(&self, k: f64) -> CameraSpec {
        CameraSpec {
            focal_px: self.focal_px * k,
            frame_width: self.frame_width * k,
            frame_height: self.frame_height * k,
            fps: self.fps,
            principal_x: Some(self.principal_x() * k),
            principal_y: Some(self.principal_y() * k),
            mount_height: self.mount_height,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.focal_px > 0.0) {
            return Err(invalid("camera.focal_px", "must be > 0"));
        }
        if !(self.frame_width > 0.0) {
            return Err(invalid("camera.frame_width", "must be > 0"));
        }
        if !(self.frame_height > 0.0) {
            return Err(invalid("camera.frame_height", "must be > 0"));
        }
        if !(self.fps > 0.0) {
            return Err(invalid("camera.fps", "must be > 0"));
        }
        if !(self.mount_height >= 0.0) {
            return Err(invalid("camera.mount_height", "must be >= 0"));
        }
        Ok(())
    }
}

/// A road user with constant relative velocity. Longitudinal distance is
/// `init_longitudinal - vel_longitudinal * t`, so a positive
/// `vel_longitudinal` means approaching. Lateral offset is positive to the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorSpec {
    pub class: ObjectClass,
    pub real_height: f64,
    pub real_width: f64,
    pub init_longitudinal: f64,
    pub init_lateral: f64,
    pub vel_longitudinal: f64,
    pub vel_lateral: f64,
    pub collision_half_width: f64,
}

impl ActorSpec {
    pub fn longitudinal_at(&self, t: f64) -> f64 {
        self.init_longitudinal - self.vel_longitudinal * t
    }

    pub fn lateral_at(&self, t: f64) -> f64 {
        self.init_lateral + self.vel_lateral * t
    }

    /// Mirror image about the camera axis.
    pub fn mirrored(&self) -> ActorSpec {
        ActorSpec { init_lateral: -self.init_lateral, vel_lateral: -self.vel_lateral, ..self.clone() }
    }

    fn validate(&self, i: usize) -> Result<(), SimError> {
        if !(self.real_height > 0.0) {
            return Err(invalid(format!("actors[{i}].real_height"), "must be > 0"));
        }
        if !(self.real_width > 0.0) {
            return Err(invalid(format!("actors[{i}].real_width"), "must be > 0"));
        }
        if !(self.init_longitudinal > 0.0) {
            return Err(invalid(format!("actors[{i}].init_longitudinal"), "must be > 0"));
        }
        if !self.init_lateral.is_finite() || !self.vel_longitudinal.is_finite() || !self.vel_lateral.is_finite() {
            return Err(invalid(format!("actors[{i}]"), "kinematics must be finite"));
        }
        if !(self.collision_half_width >= 0.0) {
            return Err(invalid(format!("actors[{i}].collision_half_width"), "must be >= 0"));
        }
        if !self.class.is_road_user() {
            return Err(invalid(format!("actors[{i}].class"), "must be vehicle or pedestrian"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub camera: CameraSpec,
    pub actors: Vec<ActorSpec>,
    pub duration: f64,
    #[serde(default)]
    pub bbox_noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<ScenarioSpec, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.camera.validate()?;
        if !(self.duration > 0.0) {
            return Err(invalid("duration", "must be > 0"));
        }
        if !(self.bbox_noise_sigma >= 0.0) {
            return Err(invalid("bbox_noise_sigma", "must be >= 0"));
        }
        for (i, actor) in self.actors.iter().enumerate() {
            actor.validate(i)?;
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.camera.fps).round() as usize
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 / self.camera.fps
    }

    pub fn mirrored(&self) -> ScenarioSpec {
        let mut out = self.clone();
        out.camera.principal_x = Some(self.camera.frame_width - self.camera.principal_x());
        out.actors = self.actors.iter().map(ActorSpec::mirrored).collect();
        out
    }
}

/// Unclipped projected box, `None` when the actor is at or behind the camera.
pub fn project_unclipped(actor: &ActorSpec, t: f64, camera: &CameraSpec) -> Option<BBox> {
    let d = actor.longitudinal_at(t);
    if !(d > 0.0) {
        return None;
    }
    let f = camera.focal_px;
    let h = f * actor.real_height / d;
    let w = f * actor.real_width / d;
    let cx = camera.principal_x() + f * actor.lateral_at(t) / d;
    let bottom = camera.principal_y() + f * camera.mount_height / d;
    Some(BBox::new(cx - w / 2.0, bottom - h, cx + w / 2.0, bottom))
}

/// Projects an actor at time `t`, clipped to the frame. `None` when the actor
/// is not in front of the camera or lies entirely outside the frame.
pub fn project_actor(actor: &ActorSpec, t: f64, camera: &CameraSpec) -> Option<BBox> {
    project_unclipped(actor, t, camera)?.clip_to(camera.frame_width, camera.frame_height)
}

/// Analytic time to collision: remaining distance over closing speed.
pub fn true_ttc(actor: &ActorSpec, t: f64) -> Option<f64> {
    let d = actor.longitudinal_at(t);
    (d > 0.0 && actor.vel_longitudinal > 0.0).then(|| d / actor.vel_longitudinal)
}

/// Simulated frames plus, for each detection, the index of the actor it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStream {
    pub frames: Vec<FrameRecord>,
    pub actor_ids: Vec<Vec<usize>>,
}

pub fn generate_detections(scenario: &ScenarioSpec) -> Result<SimulatedStream, SimError> {
    if scenario.actors.is_empty() {
        return Err(SimError::NoActors);
    }
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let sigma = scenario.bbox_noise_sigma;
    let camera = &scenario.camera;

    let n = scenario.frame_count();
    let mut frames = Vec::with_capacity(n);
    let mut actor_ids = Vec::with_capacity(n);
    for k in 0..n {
        let t = scenario.frame_time(k);
        let mut detections = Vec::new();
        let mut ids = Vec::new();
        for (i, actor) in scenario.actors.iter().enumerate() {
            let Some(truth) = project_unclipped(actor, t, camera) else { continue };
            let noisy = if sigma > 0.0 {
                let (w, h) = (truth.width(), truth.height());
                let mut e = || unit.sample(&mut rng);
                BBox::new(
                    truth.x1 + sigma * w * e(),
                    truth.y1 + sigma * h * e(),
                    truth.x2 + sigma * w * e(),
                    truth.y2 + sigma * h * e(),
                )
            } else {
                truth
            };
            let Some(bbox) = noisy.clip_to(camera.frame_width, camera.frame_height) else { continue };
            detections.push(Detection { t, frame_id: k as u64, class: actor.class, confidence: 1.0, bbox });
            ids.push(i);
        }
        frames.push(FrameRecord::new(k as u64, t, detections));
        actor_ids.push(ids);
    }
    Ok(SimulatedStream { frames, actor_ids })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthLabel {
    pub actor: usize,
    pub time: f64,
}

/// Earliest frame time per actor at which the analytic TTC is at most `delta`
/// and the lateral offset predicted at closing lies inside the actor's
/// collision corridor.
pub fn label_ground_truth_events(scenario: &ScenarioSpec, delta: f64) -> Vec<GroundTruthLabel> {
    let mut labels = Vec::new();
    for (i, actor) in scenario.actors.iter().enumerate() {
        let hit = (0..scenario.frame_count()).map(|k| scenario.frame_time(k)).find(|&t| {
            true_ttc(actor, t).is_some_and(|ttc| {
                ttc <= delta && (actor.lateral_at(t) + actor.vel_lateral * ttc).abs() <= actor.collision_half_width
            })
        });
        if let Some(time) = hit {
            labels.push(GroundTruthLabel { actor: i, time });
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(d0: f64, x0: f64, closing: f64, lateral: f64) -> ActorSpec {
        ActorSpec {
            class: ObjectClass::Vehicle,
            real_height: 1.5,
            real_width: 1.8,
            init_longitudinal: d0,
            init_lateral: x0,
            vel_longitudinal: closing,
            vel_lateral: lateral,
            collision_half_width: 1.0,
        }
    }

    fn cam(f: f64) -> CameraSpec {
        CameraSpec::new(f, 1280.0, 720.0, 24.0)
    }

    fn scenario(actors: Vec<ActorSpec>, duration: f64) -> ScenarioSpec {
        ScenarioSpec { name: "t".into(), camera: cam(1000.0), actors, duration, bbox_noise_sigma: 0.0, seed: 1 }
    }

    #[test]
    fn projected_height_follows_pinhole() {
        let b = project_actor(&car(30.0, 0.0, 0.0, 0.0), 0.0, &cam(1000.0)).unwrap();
        assert!((b.height() - 50.0).abs() < 1e-12);
        let b2 = project_actor(&car(30.0, 0.0, 0.0, 0.0), 0.0, &cam(2000.0)).unwrap();
        assert!((b2.height() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn height_shrinks_with_distance() {
        let c = cam(1000.0);
        let hs: Vec<f64> = [10.0, 20.0, 100.0, 1e4, 1e7]
            .iter()
            .map(|&d| project_unclipped(&car(d, 0.0, 0.0, 0.0), 0.0, &c).unwrap().height())
            .collect();
        assert!(hs.windows(2).all(|w| w[1] < w[0]));
        assert!(hs[4] < 1e-3);
    }

    #[test]
    fn behind_camera_projects_to_none() {
        let a = car(5.0, 0.0, 10.0, 0.0);
        assert!(project_actor(&a, 0.6, &cam(1000.0)).is_none());
        assert!(project_actor(&a, 0.5, &cam(1000.0)).is_none());
    }

    #[test]
    fn true_ttc_examples() {
        let a = car(30.0, 0.0, 10.0, 0.0);
        assert!((true_ttc(&a, 0.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((true_ttc(&a, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(true_ttc(&car(30.0, 0.0, 0.0, 0.0), 0.0), None);
        assert_eq!(true_ttc(&car(30.0, 0.0, -3.0, 0.0), 0.0), None);
    }

    #[test]
    fn frame_count_and_zero_noise_identity() {
        let s = scenario(vec![car(40.0, 0.5, 5.0, 0.1)], 1.0);
        let stream = generate_detections(&s).unwrap();
        assert_eq!(stream.frames.len(), 24);
        for frame in &stream.frames {
            let expected = project_actor(&s.actors[0], frame.t, &s.camera).unwrap();
            assert_eq!(frame.detections[0].bbox, expected);
            assert_eq!(frame.detections[0].confidence, 1.0);
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let mut s = scenario(vec![car(40.0, 0.5, 5.0, 0.1), car(60.0, -3.0, 2.0, 0.0)], 2.0);
        s.bbox_noise_sigma = 0.05;
        assert_eq!(generate_detections(&s).unwrap(), generate_detections(&s).unwrap());
        let mut other = s.clone();
        other.seed = 2;
        assert_ne!(generate_detections(&s).unwrap(), generate_detections(&other).unwrap());
    }

    #[test]
    fn zero_actors_rejected() {
        assert_eq!(generate_detections(&scenario(vec![], 1.0)), Err(SimError::NoActors));
    }

    #[test]
    fn labels() {
        let head_on = scenario(vec![car(30.0, 0.0, 10.0, 0.0)], 2.0);
        let l = label_ground_truth_events(&head_on, 3.0);
        assert_eq!(l, vec![GroundTruthLabel { actor: 0, time: 0.0 }]);
        assert!(label_ground_truth_events(&scenario(vec![car(30.0, 0.0, -5.0, 0.0)], 2.0), 3.0).is_empty());
        assert!(label_ground_truth_events(&scenario(vec![car(30.0, 5.0, 10.0, 0.0)], 2.0), 3.0).is_empty());
    }

    #[test]
    fn size_times_distance_is_constant() {
        let a = car(50.0, 1.0, 7.0, 0.3);
        let c = cam(1000.0);
        let k0 = project_unclipped(&a, 0.0, &c).unwrap().height() * a.longitudinal_at(0.0);
        for i in 1..100 {
            let t = i as f64 * 0.05;
            let hd = project_unclipped(&a, t, &c).unwrap().height() * a.longitudinal_at(t);
            assert!((hd - k0).abs() <= 1e-9 * k0);
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut s = scenario(vec![car(30.0, 0.0, 1.0, 0.0)], 1.0);
        s.actors[0].real_height = 0.0;
        assert_eq!(s.validate(), Err(invalid("actors[0].real_height", "must be > 0")));
    }
}
