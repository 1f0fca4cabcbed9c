//! Compares windowed TTC estimates with the analytic value for an approaching car.

use nearcrash::sim::{self, ActorSpec, CameraSpec};
use nearcrash::ttc::{ttc_from_window, EstimatorConfig, Sample, SampleWindow};
use nearcrash::ObjectClass;

fn main() {
    let camera = CameraSpec::new(1000.0, 1280.0, 720.0, 24.0);
    let car = ActorSpec {
        class: ObjectClass::Vehicle,
        real_height: 1.5,
        real_width: 1.8,
        init_longitudinal: 50.0,
        init_lateral: 0.0,
        vel_longitudinal: 10.0,
        vel_lateral: 0.0,
        collision_half_width: 1.8,
    };
    let cfg = EstimatorConfig::default();
    let mut window = SampleWindow::new(cfg.window_capacity());
    println!("{:>6} {:>8} {:>8} {:>8}", "t", "true", "ttc_h", "ttc_w");
    for k in 0..100 {
        let t = k as f64 / camera.fps;
        let Some(b) = sim::project_actor(&car, t, &camera) else { break };
        window.push(Sample { t, h: b.height(), w: b.width(), cx: b.center_x(), by: b.bottom() }).unwrap();
        if k % 8 != 0 {
            continue;
        }
        let truth = sim::true_ttc(&car, t).unwrap();
        let est = ttc_from_window(&window, cfg.size_window_len, cfg.slope_epsilon);
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!("{t:6.2} {truth:8.3} {:>8} {:>8}", fmt(est.and_then(|e| e.ttc_h)), fmt(est.and_then(|e| e.ttc_w)));
    }
}
