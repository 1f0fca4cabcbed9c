//! Live mode: frames are replayed in real time and a deliberately slow
//! processor shows latest-wins dropping.
//!
//!     cargo run --example live_pipeline -- 60

use nearcrash::config::Mode;
use nearcrash::pipeline::{self, MemorySink, RunOptions};
use nearcrash::{scenarios, sim, EngineConfig};

fn main() {
    let delay_ms: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let scenario = scenarios::by_name("head_on").unwrap();
    let stream = sim::generate_detections(&scenario).unwrap();
    let mut cfg = EngineConfig::default();
    cfg.pipeline.mode = Mode::Live;
    cfg.pipeline.consumer_delay_ms = delay_ms;
    let out = pipeline::run(stream.frames.into_iter().map(Ok::<_, String>), &cfg, None, MemorySink, RunOptions::default());
    let r = out.report;
    println!("processing delay {delay_ms} ms per frame");
    println!("produced {}  processed {}  dropped {}  ({:.1} fps over {:.2}s)", r.frames_produced, r.frames_processed, r.frames_dropped, r.achieved_fps, r.wall_seconds);
    for e in &out.events {
        println!("event at {:.2}s (frame {}), ttc_h {:.2}", e.trigger_time, e.trigger_frame_id, e.ttc_h);
    }
}
