//! Near-crash decision rules.
//!
//! A target is a near-crash candidate when both regressions agree it is
//! approaching soon (height TTC under `delta`, width TTC under `phi`) and its
//! horizontal drift, weighted by how far it sits from the line of sight and
//! from the frame bottom, falls inside `(alpha, beta)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ttc::{normalized_x, MotionEstimate, TtcEstimate};
use crate::types::ObjectClass;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct RuleConfigError {
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Height-TTC threshold in seconds.
    pub delta: f64,
    /// Width-TTC threshold in seconds, larger than `delta`.
    pub phi: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Line-of-sight column in pixels; `None` means the frame center.
    pub c_los: Option<f64>,
    /// Minimum seconds between two triggers of the same track.
    pub cooldown: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self { delta: 3.0, phi: 6.75, alpha: -0.75, beta: 0.05, c_los: None, cooldown: 10.0 }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<(), RuleConfigError> {
        let err = |field: &str, message: &str| RuleConfigError { field: field.into(), message: message.into() };
        if !(self.delta > 0.0) {
            return Err(err("delta", "must be > 0"));
        }
        if !(self.phi > self.delta) {
            return Err(err("phi", "must be greater than delta"));
        }
        // alpha may be -inf to disable the lower bound.
        if !(self.alpha < 0.0) || self.alpha.is_nan() {
            return Err(err("alpha", "must be negative"));
        }
        if !(self.beta > 0.0) {
            return Err(err("beta", "must be positive"));
        }
        if !(self.cooldown >= 0.0) {
            return Err(err("cooldown", "must be >= 0"));
        }
        if let Some(c) = self.c_los {
            if !c.is_finite() {
                return Err(err("c_los", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Image geometry needed by the motion rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub width: f64,
    pub height: f64,
    pub c_los: f64,
}

impl FrameGeometry {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height, c_los: width / 2.0 }
    }

    pub fn with_c_los(mut self, c_los: Option<f64>) -> Self {
        if let Some(c) = c_los {
            self.c_los = c;
        }
        self
    }
}

pub fn check_size_rule(ttc: &TtcEstimate, cfg: &RuleConfig) -> bool {
    let in_band = |v: Option<f64>, hi: f64| v.is_some_and(|x| x > 0.0 && x < hi);
    in_band(ttc.ttc_h, cfg.delta) && in_band(ttc.ttc_w, cfg.phi)
}

/// Returns whether the motion rule passes and the product it tested.
///
/// `cx` and `by` are the latest box center column and bottom row.
pub fn check_motion_rule(motion: &MotionEstimate, cx: f64, by: f64, geometry: &FrameGeometry, cfg: &RuleConfig) -> (bool, f64) {
    let x = normalized_x(cx, geometry.c_los, geometry.width).clamp(-1.0, 1.0);
    let y = ((geometry.height - by) / geometry.height).clamp(0.0, 1.0);
    let product = motion.omega * x * y;
    (cfg.alpha < product && product < cfg.beta, product)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearCrashDecision {
    pub triggered: bool,
    pub size_rule_pass: bool,
    pub motion_rule_pass: bool,
    pub ttc: Option<TtcEstimate>,
    pub motion: Option<MotionEstimate>,
    pub motion_product: Option<f64>,
}

/// Pairing of the two road users in an event: the ego vehicle and the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventType {
    #[serde(rename = "vehicle-vehicle")]
    VehicleVehicle,
    #[serde(rename = "vehicle-pedestrian")]
    VehiclePedestrian,
}

impl EventType {
    pub fn for_target(class: ObjectClass) -> Option<EventType> {
        match class {
            ObjectClass::Vehicle => Some(EventType::VehicleVehicle),
            ObjectClass::Pedestrian => Some(EventType::VehiclePedestrian),
            ObjectClass::Other => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::VehicleVehicle => "vehicle-vehicle",
            EventType::VehiclePedestrian => "vehicle-pedestrian",
        }
    }
}

impl std::fmt::Display for EventType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Applies both rules per track and debounces repeated triggers.
#[derive(Debug, Clone)]
pub struct RuleEngine {
    cfg: RuleConfig,
    last_trigger: HashMap<u64, f64>,
}

impl RuleEngine {
    pub fn new(cfg: RuleConfig) -> Self {
        Self { cfg, last_trigger: HashMap::new() }
    }

    pub fn config(&self) -> &RuleConfig {
        &self.cfg
    }

    /// Missing estimates fail their rule. `latest` is the newest `(cx, by)`.
    pub fn decide(
        &mut self,
        track_id: u64,
        ttc: Option<TtcEstimate>,
        motion: Option<MotionEstimate>,
        latest: (f64, f64),
        geometry: &FrameGeometry,
        now: f64,
    ) -> NearCrashDecision {
        let size_rule_pass = ttc.as_ref().is_some_and(|e| check_size_rule(e, &self.cfg));
        let motion_eval = motion.as_ref().map(|m| check_motion_rule(m, latest.0, latest.1, geometry, &self.cfg));
        let motion_rule_pass = motion_eval.is_some_and(|(pass, _)| pass);
        let cooled = self.last_trigger.get(&track_id).is_none_or(|&last| now - last >= self.cfg.cooldown);
        let triggered = size_rule_pass && motion_rule_pass && cooled;
        if triggered {
            self.last_trigger.insert(track_id, now);
        }
        NearCrashDecision {
            triggered,
            size_rule_pass,
            motion_rule_pass,
            ttc,
            motion,
            motion_product: motion_eval.map(|(_, p)| p),
        }
    }

    /// Drops debounce state of tracks that no longer exist.
    pub fn retain_tracks(&mut self, mut keep: impl FnMut(u64) -> bool) {
        self.last_trigger.retain(|&id, _| keep(id));
    }
}
