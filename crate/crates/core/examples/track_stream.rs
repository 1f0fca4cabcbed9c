//! Runs the tracker alone over a multi-actor stream and reports track lifetimes.

use std::collections::BTreeMap;

use nearcrash::sim::{self, ActorSpec, CameraSpec, ScenarioSpec};
use nearcrash::tracker::{Tracker, TrackerConfig};
use nearcrash::ObjectClass;

fn main() {
    let actor = |x: f64, d: f64, class: ObjectClass| ActorSpec {
        class,
        real_height: if class == ObjectClass::Pedestrian { 1.7 } else { 1.5 },
        real_width: if class == ObjectClass::Pedestrian { 0.5 } else { 1.8 },
        init_longitudinal: d,
        init_lateral: x,
        vel_longitudinal: 3.0,
        vel_lateral: 0.0,
        collision_half_width: 1.8,
    };
    let scenario = ScenarioSpec {
        name: "traffic".into(),
        camera: CameraSpec::new(1000.0, 1280.0, 720.0, 24.0),
        actors: vec![actor(-5.0, 30.0, ObjectClass::Vehicle), actor(0.0, 40.0, ObjectClass::Vehicle), actor(6.0, 25.0, ObjectClass::Pedestrian)],
        duration: 3.0,
        bbox_noise_sigma: 0.01,
        seed: 7,
    };
    let stream = sim::generate_detections(&scenario).unwrap();
    let mut tracker = Tracker::new(TrackerConfig::default(), 32);
    let mut seen: BTreeMap<u64, (ObjectClass, f64, f64, usize)> = BTreeMap::new();
    for frame in &stream.frames {
        for track in tracker.step(frame.t, &frame.detections).unwrap() {
            let e = seen.entry(track.id()).or_insert((track.class(), frame.t, frame.t, 0));
            e.2 = frame.t;
            e.3 += 1;
        }
    }
    for (id, (class, first, last, frames)) in seen {
        println!("track {id:2} {class:?}: confirmed {first:.2}s..{last:.2}s over {frames} frames");
    }
}
