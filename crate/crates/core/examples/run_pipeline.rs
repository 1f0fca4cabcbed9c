//! Offline pipeline over every bundled scenario, scored against the analytic labels.

use nearcrash::eval::{self, TimedEvent};
use nearcrash::{pipeline, scenarios, sim, EngineConfig};

fn main() {
    let cfg = EngineConfig::default();
    let (mut pred, mut gt) = (Vec::new(), Vec::new());
    let all = scenarios::all();
    let videos = all.len();
    for scenario in all {
        let stream = sim::generate_detections(&scenario).unwrap();
        let out = pipeline::run_frames(&stream.frames, &cfg, None);
        println!("{:22} {} frames, {} events", scenario.name, out.report.frames_processed, out.events.len());
        for e in &out.events {
            println!(
                "    #{} {} at {:.2}s  ttc_h={:.2} ttc_w={:.2}  clip [{:.2}, {:.2}]{}",
                e.event_id,
                e.event_type,
                e.trigger_time,
                e.ttc_h,
                e.ttc_w,
                e.clip_start,
                e.clip_end,
                if e.truncated { " truncated" } else { "" }
            );
            pred.push(TimedEvent::new(scenario.name.clone(), e.trigger_time));
        }
        gt.extend(sim::label_ground_truth_events(&scenario, cfg.rules.delta).into_iter().map(|l| TimedEvent::new(scenario.name.clone(), l.time)));
    }
    let (report, _) = eval::report(&pred, &gt, eval::DEFAULT_MATCH_WINDOW, Some(videos), None);
    print!("\n{}", report.render_table());
}
