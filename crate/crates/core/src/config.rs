//! Engine configuration: one JSON document, every leaf addressable by a
//! dotted path such as `rules.delta` or `tracker.kalman.nominal_fps`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::gps::GpsAffine;
use crate::rules::{FrameGeometry, RuleConfig};
use crate::tracker::TrackerConfig;
use crate::ttc::EstimatorConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown config field `{0}`")]
    UnknownField(String),
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every frame is processed; used for evaluation on recorded streams.
    #[default]
    Offline,
    /// Capacity-one, latest-wins hand-off from the source to the processor.
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameConfig {
    pub width: f64,
    pub height: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { width: 1280.0, height: 720.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: Mode,
    /// Seconds of context kept before a trigger.
    pub pre_seconds: f64,
    /// Seconds recorded after a trigger.
    pub post_seconds: f64,
    /// Upper frame rate used to size the context ring buffer.
    pub max_fps: f64,
    /// Lossless source queue depth in offline mode.
    pub offline_queue: usize,
    /// Live-mode replay speed relative to capture timestamps; 0 disables pacing.
    pub live_replay_speed: f64,
    /// Artificial per-frame processing delay, for exercising frame dropping.
    pub consumer_delay_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Offline,
            pre_seconds: 10.0,
            post_seconds: 10.0,
            max_fps: 60.0,
            offline_queue: 64,
            live_replay_speed: 1.0,
            consumer_delay_ms: 0,
        }
    }
}

impl PipelineConfig {
    pub fn context_capacity(&self) -> usize {
        (self.pre_seconds * self.max_fps).ceil() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpsConfig {
    #[serde(flatten)]
    pub affine: GpsAffine,
    /// Trajectory sampling period in seconds.
    pub sample_period: f64,
}

impl Default for GpsConfig {
    fn default() -> Self {
        Self { affine: GpsAffine::default(), sample_period: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub tracker: TrackerConfig,
    pub regression: EstimatorConfig,
    pub rules: RuleConfig,
    pub frame: FrameConfig,
    pub pipeline: PipelineConfig,
    pub gps: GpsConfig,
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: EngineConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn geometry(&self) -> FrameGeometry {
        FrameGeometry::new(self.frame.width, self.frame.height).with_c_los(self.rules.c_los)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.tracker;
        if !(0.0..=1.0).contains(&t.confidence_min) {
            return Err(invalid("tracker.confidence_min", "must be in [0, 1]"));
        }
        if !(t.iou_min > 0.0 && t.iou_min < 1.0) {
            return Err(invalid("tracker.iou_min", "must be in (0, 1)"));
        }
        if t.min_hits == 0 {
            return Err(invalid("tracker.min_hits", "must be >= 1"));
        }
        if !(t.kalman.nominal_fps > 0.0) {
            return Err(invalid("tracker.kalman.nominal_fps", "must be > 0"));
        }
        let r = &self.regression;
        if r.size_window_len < 2 {
            return Err(invalid("regression.size_window_len", "must be >= 2"));
        }
        if r.center_window_len < 2 {
            return Err(invalid("regression.center_window_len", "must be >= 2"));
        }
        if !(r.slope_epsilon >= 0.0) {
            return Err(invalid("regression.slope_epsilon", "must be >= 0"));
        }
        self.rules.validate().map_err(|e| invalid(&format!("rules.{}", e.field), e.message))?;
        if !(self.frame.width > 0.0) {
            return Err(invalid("frame.width", "must be > 0"));
        }
        if !(self.frame.height > 0.0) {
            return Err(invalid("frame.height", "must be > 0"));
        }
        let p = &self.pipeline;
        if !(p.pre_seconds >= 0.0) {
            return Err(invalid("pipeline.pre_seconds", "must be >= 0"));
        }
        if !(p.post_seconds >= 0.0) {
            return Err(invalid("pipeline.post_seconds", "must be >= 0"));
        }
        if !(p.max_fps > 0.0) {
            return Err(invalid("pipeline.max_fps", "must be > 0"));
        }
        if p.offline_queue == 0 {
            return Err(invalid("pipeline.offline_queue", "must be >= 1"));
        }
        if !(p.live_replay_speed >= 0.0) {
            return Err(invalid("pipeline.live_replay_speed", "must be >= 0"));
        }
        let g = &self.gps;
        if !(g.sample_period > 0.0) {
            return Err(invalid("gps.sample_period", "must be > 0"));
        }
        if g.affine.lat_scale == 0.0 || g.affine.lon_scale == 0.0 {
            return Err(invalid("gps.lat_scale", "scales must be non-zero"));
        }
        Ok(())
    }

    /// Every dotted leaf path of the configuration.
    pub fn dotted_paths() -> Vec<String> {
        fn walk(prefix: &str, v: &Value, out: &mut Vec<String>) {
            match v {
                Value::Object(map) => {
                    for (k, child) in map {
                        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                        walk(&path, child, out);
                    }
                }
                _ => out.push(prefix.to_string()),
            }
        }
        let mut out = Vec::new();
        walk("", &serde_json::to_value(EngineConfig::default()).expect("config serializes"), &mut out);
        out
    }

    /// Overrides one leaf. `raw` is parsed as JSON, falling back to a string.
    pub fn set_path(&mut self, path: &str, raw: &str) -> Result<(), ConfigError> {
        let mut root = serde_json::to_value(*self)?;
        let mut node = &mut root;
        for key in path.split('.') {
            node = node
                .as_object_mut()
                .and_then(|m| m.get_mut(key))
                .ok_or_else(|| ConfigError::UnknownField(path.to_string()))?;
        }
        if node.is_object() {
            return Err(ConfigError::UnknownField(path.to_string()));
        }
        *node = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        *self = serde_json::from_value(root).map_err(|e| invalid(path, e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = EngineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(EngineConfig::from_json(&cfg.to_json_pretty()).unwrap(), cfg);
        assert_eq!(cfg.rules.delta, 3.0);
        assert_eq!(cfg.rules.phi, 6.75);
        assert_eq!(cfg.regression.size_window_len, 12);
        assert_eq!(cfg.regression.center_window_len, 18);
        assert_eq!(cfg.tracker.confidence_min, 0.4);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg = EngineConfig::from_json(r#"{"rules": {"delta": 2.5}}"#).unwrap();
        assert_eq!(cfg.rules.delta, 2.5);
        assert_eq!(cfg.rules.beta, 0.05);
    }

    #[test]
    fn violations_carry_paths() {
        let err = EngineConfig::from_json(r#"{"rules": {"delta": 8.0}}"#).unwrap_err();
        assert_eq!(err.to_string(), "rules.phi: must be greater than delta");
        let err = EngineConfig::from_json(r#"{"tracker": {"iou_min": 1.5}}"#).unwrap_err();
        assert!(err.to_string().starts_with("tracker.iou_min"));
        assert!(EngineConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn dotted_overrides() {
        let paths = EngineConfig::dotted_paths();
        for p in ["rules.delta", "tracker.kalman.nominal_fps", "pipeline.mode", "gps.lat_scale", "rules.c_los"] {
            assert!(paths.iter().any(|x| x == p), "missing {p}");
        }
        let mut cfg = EngineConfig::default();
        cfg.set_path("rules.delta", "2").unwrap();
        cfg.set_path("pipeline.mode", "live").unwrap();
        cfg.set_path("rules.c_los", "600").unwrap();
        assert_eq!(cfg.rules.delta, 2.0);
        assert_eq!(cfg.pipeline.mode, Mode::Live);
        assert_eq!(cfg.rules.c_los, Some(600.0));
        assert!(matches!(cfg.set_path("rules.nope", "1"), Err(ConfigError::UnknownField(_))));
        assert!(cfg.set_path("tracker.max_age", "abc").is_err());
    }
}
