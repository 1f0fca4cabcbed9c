//! Bundled example scenarios, one per relative-motion pattern.

use crate::sim::ScenarioSpec;

/// `(name, json)` for every bundled scenario.
pub const BUNDLED: [(&str, &str); 6] = [
    ("head_on", include_str!("../scenarios/head_on.json")),
    ("cut_in", include_str!("../scenarios/cut_in.json")),
    ("adjacent_lane_pass", include_str!("../scenarios/adjacent_lane_pass.json")),
    ("receding", include_str!("../scenarios/receding.json")),
    ("truncated_oncoming", include_str!("../scenarios/truncated_oncoming.json")),
    ("jaywalking_pedestrian", include_str!("../scenarios/jaywalking_pedestrian.json")),
];

pub fn by_name(name: &str) -> Option<ScenarioSpec> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, json)| ScenarioSpec::from_json(json).expect("bundled scenario parses"))
}

pub fn all() -> Vec<ScenarioSpec> {
    BUNDLED.iter().map(|(_, json)| ScenarioSpec::from_json(json).expect("bundled scenario parses")).collect()
}
