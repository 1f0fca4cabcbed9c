//! Renders a bundled scenario to detections and prints the analytic labels.
//!
//!     cargo run --example simulate_scenario -- cut_in

use nearcrash::{scenarios, sim};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "head_on".into());
    let Some(scenario) = scenarios::by_name(&name) else {
        eprintln!("unknown scenario {name}");
        std::process::exit(2);
    };
    let stream = sim::generate_detections(&scenario).expect("bundled scenarios are valid");
    println!("{name}: {} frames at {} fps", stream.frames.len(), scenario.camera.fps);
    for (frame, ids) in stream.frames.iter().zip(&stream.actor_ids).step_by(12) {
        for (det, actor) in frame.detections.iter().zip(ids) {
            let b = det.bbox;
            let ttc = sim::true_ttc(&scenario.actors[*actor], frame.t).map_or("-".into(), |v| format!("{v:.2}"));
            println!("  t={:5.2}  actor {actor}  box h={:6.1} w={:6.1} cx={:6.1}  true ttc {ttc}", frame.t, b.height(), b.width(), b.center_x());
        }
    }
    for label in sim::label_ground_truth_events(&scenario, 3.0) {
        println!("label: actor {} at t={:.3}", label.actor, label.time);
    }
}
